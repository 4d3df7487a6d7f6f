#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "netdiff/common.hpp"
#include "netdiff/fclt.hpp"
#include "netdiff/gillespie.hpp"
#include "netdiff/lln.hpp"
#include "netdiff/experiments.hpp"

namespace netdiff {

// Locale-independent shortest-roundtrip formatting: 17 significant digits,
// '.' decimal point.
inline std::string fmt_real(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

// Writes through a temp file in the same directory, then renames, so readers
// never observe a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const auto dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw config_error("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out) throw config_error("write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream out;
    out << "t,node,dXS,dXSI,dXSS\n";
    for (const auto& ev : traj.events)
        out << fmt_real(ev.t) << "," << ev.node << "," << InfectionEvent::dx_s << ","
            << ev.dx_si << "," << ev.dx_ss << "\n";
    return out.str();
}

inline std::string lln_csv(const LlnSolution& sol, const DegreeDistribution& dist) {
    std::ostringstream out;
    out << "t,xS,xSI,xSS,theta,infected_fraction\n";
    for (std::size_t j = 0; j < sol.size(); ++j)
        out << fmt_real(sol.t[j]) << "," << fmt_real(sol.x_s[j]) << ","
            << fmt_real(sol.x_si[j]) << "," << fmt_real(sol.x_ss[j]) << ","
            << fmt_real(sol.theta[j]) << ","
            << fmt_real(1.0 - sol.alpha_s * dist.pgf(sol.theta[j])) << "\n";
    return out.str();
}

namespace detail {

inline void append_upper_triangle(std::ostringstream& out, const Mat3& m) {
    // order: (S,S),(S,SI),(S,SS),(SI,SI),(SI,SS),(SS,SS)
    out << "," << fmt_real(m(0, 0)) << "," << fmt_real(m(0, 1)) << "," << fmt_real(m(0, 2))
        << "," << fmt_real(m(1, 1)) << "," << fmt_real(m(1, 2)) << "," << fmt_real(m(2, 2));
}

} // namespace detail

inline std::string fclt_csv(const FcltSolution& sol) {
    std::ostringstream out;
    out << "t"
        << ",v_S,v_S_SI,v_S_SS,v_SI,v_SI_SS,v_SS"
        << ",V_S,V_S_SI,V_S_SS,V_SI,V_SI_SS,V_SS"
        << ",Sigma_S,Sigma_S_SI,Sigma_S_SS,Sigma_SI,Sigma_SI_SS,Sigma_SS\n";
    for (std::size_t j = 0; j < sol.size(); ++j) {
        out << fmt_real(sol.t[j]);
        detail::append_upper_triangle(out, sol.v[j]);
        detail::append_upper_triangle(out, sol.big_v[j]);
        detail::append_upper_triangle(out, sol.sigma[j]);
        out << "\n";
    }
    return out.str();
}

// Confidence ellipses for the (X_S, X_SI) marginal on the count scale.
inline std::string ellipse_csv(const LlnSolution& lln, const FcltSolution& fclt, int n,
                               double level, std::size_t stride = 1) {
    std::ostringstream out;
    out << "t,cx,cy,a,b,angle_rad\n";
    const double n_real = static_cast<double>(n);
    for (std::size_t j = 0; j < fclt.size(); j += stride) {
        const Mat3& sigma = fclt.sigma[j];
        const Ellipse e = confidence_ellipse(
            n_real * sigma(0, 0), n_real * sigma(0, 1), n_real * sigma(1, 1),
            n_real * lln.x_s[j], n_real * lln.x_si[j], level);
        out << fmt_real(fclt.t[j]) << "," << fmt_real(e.center_x) << ","
            << fmt_real(e.center_y) << "," << fmt_real(e.semi_major) << ","
            << fmt_real(e.semi_minor) << "," << fmt_real(e.angle_rad) << "\n";
    }
    return out.str();
}

inline std::string profile_csv(const PercolationProfile& profile) {
    std::ostringstream out;
    out << "beta";
    for (double t : profile.times) out << "," << fmt_real(t);
    out << "\n";
    for (std::size_t b = 0; b < profile.betas.size(); ++b) {
        out << fmt_real(profile.betas[b]);
        for (std::size_t j = 0; j < profile.times.size(); ++j) {
            out << ",";
            if (profile.valid[b][j]) out << fmt_real(profile.fraction[b][j]);
            else out << "nan";
        }
        out << "\n";
    }
    return out.str();
}

} // namespace netdiff
