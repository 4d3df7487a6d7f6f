#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "netdiff/common.hpp"
#include "netdiff/rng.hpp"

namespace netdiff {

enum class DegreeKind { poisson, negative_binomial, regular, table };

inline const char* to_string(DegreeKind k) {
    switch (k) {
        case DegreeKind::poisson: return "poisson";
        case DegreeKind::negative_binomial: return "negative_binomial";
        case DegreeKind::regular: return "regular";
        case DegreeKind::table: return "table";
    }
    return "?";
}

// Degree distribution with dense pmf on {0, ..., K}. Infinite-support
// families are truncated where the tail of k^3 p_k is negligible and then
// renormalized, so moments up to order three and PGF derivatives up to
// order three are trustworthy. Immutable after construction.
class DegreeDistribution {
public:
    static DegreeDistribution poisson(double lambda) {
        if (!(lambda > 0.0))
            throw config_error("poisson: lambda must be positive");
        std::vector<double> pmf;
        pmf.push_back(std::exp(-lambda));
        append_truncated_tail(pmf, [lambda](int k, double pk) {
            return pk * lambda / static_cast<double>(k + 1);
        });
        DegreeDistribution d(std::move(pmf), DegreeKind::poisson);
        d.param_a_ = lambda;
        return d;
    }

    // Number-of-failures convention: p_k = C(k+r-1, k) (1-p)^k p^r,
    // mean r(1-p)/p.
    static DegreeDistribution negative_binomial(int r, double p) {
        if (r < 1) throw config_error("negative_binomial: r must be >= 1");
        if (!(p > 0.0) || !(p < 1.0))
            throw config_error("negative_binomial: p must lie in (0, 1)");
        std::vector<double> pmf;
        pmf.push_back(std::pow(p, r));
        const double q = 1.0 - p;
        append_truncated_tail(pmf, [r, q](int k, double pk) {
            return pk * q * static_cast<double>(k + r) / static_cast<double>(k + 1);
        });
        DegreeDistribution d(std::move(pmf), DegreeKind::negative_binomial);
        d.param_a_ = static_cast<double>(r);
        d.param_b_ = p;
        return d;
    }

    static DegreeDistribution regular(int r) {
        if (r < 0) throw config_error("regular: degree must be non-negative");
        std::vector<double> pmf(static_cast<std::size_t>(r) + 1, 0.0);
        pmf.back() = 1.0;
        DegreeDistribution d(std::move(pmf), DegreeKind::regular);
        d.param_a_ = static_cast<double>(r);
        return d;
    }

    static DegreeDistribution from_table(const std::vector<std::pair<int, double>>& entries) {
        if (entries.empty()) throw config_error("table: no entries");
        int max_k = 0;
        for (const auto& [k, pk] : entries) {
            if (k < 0) throw config_error("table: negative degree");
            if (pk < 0.0) throw config_error("table: negative mass");
            max_k = std::max(max_k, k);
        }
        std::vector<double> pmf(static_cast<std::size_t>(max_k) + 1, 0.0);
        double total = 0.0;
        for (const auto& [k, pk] : entries) {
            pmf[static_cast<std::size_t>(k)] += pk;
            total += pk;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw config_error("table: masses must sum to 1 within 1e-9");
        return DegreeDistribution(std::move(pmf), DegreeKind::table);
    }

    // Descriptor grammar: "poisson:5", "nb:2,0.75", "regular:3",
    // "table:1=0.7,4=0.2,45=0.1".
    static DegreeDistribution parse(std::string_view text);

    DegreeKind kind() const { return kind_; }
    int max_degree() const { return static_cast<int>(pmf_.size()) - 1; }

    double pmf(int k) const {
        if (k < 0 || k > max_degree()) return 0.0;
        return pmf_[static_cast<std::size_t>(k)];
    }
    const std::vector<double>& probabilities() const { return pmf_; }

    double pgf(double x) const {
        check_unit_interval(x);
        double s = 0.0;
        for (std::size_t k = pmf_.size(); k-- > 0;) s = s * x + pmf_[k];
        return s;
    }

    // r-th derivative of the PGF, r in 1..3: sum_k (k)_r x^{k-r} p_k.
    double pgf_derivative(double x, int order) const {
        check_unit_interval(x);
        if (order < 1 || order > 3)
            throw config_error("pgf_derivative: order must be 1..3");
        const int kmax = max_degree();
        double s = 0.0;
        for (int k = kmax; k >= order; --k) {
            double coeff = pmf_[static_cast<std::size_t>(k)];
            for (int j = 0; j < order; ++j) coeff *= static_cast<double>(k - j);
            s = s * x + coeff;
        }
        return s;
    }

    // psi^{r-1}(x) d^r psi(x) / (d psi(x))^r, r in {2, 3}.
    double d_operator(double x, int order) const {
        if (order < 2 || order > 3)
            throw config_error("d_operator: order must be 2 or 3");
        const double d1 = pgf_derivative(x, 1);
        if (d1 <= k_singular_floor)
            throw singular_error("d_operator: vanishing first derivative of the PGF");
        const double psi = pgf(x);
        const double dr = pgf_derivative(x, order);
        double denom = d1 * d1;
        double num = psi;
        if (order == 3) {
            denom *= d1;
            num *= psi;
        }
        return num * dr / denom;
    }

    // Mean excess-degree correction factor psi * psi'' / (psi')^2.
    double kappa(double x) const { return d_operator(x, 2); }

    double moment(int order) const {
        if (order < 1 || order > 3) throw config_error("moment: order must be 1..3");
        double s = 0.0;
        for (std::size_t k = 1; k < pmf_.size(); ++k) {
            double kr = static_cast<double>(k);
            for (int j = 1; j < order; ++j) kr *= static_cast<double>(k);
            s += kr * pmf_[k];
        }
        return s;
    }

    double mean() const { return moment(1); }

    int sample(Rng& rng) const {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<int>(std::min<std::size_t>(
            static_cast<std::size_t>(it - cdf_.begin()), pmf_.size() - 1));
    }

    // i.i.d. degrees; an odd total is repaired by resampling the last entry
    // (bounded retries, then error) so half-edge pairing is possible.
    std::vector<int> sample_degree_sequence(int n, Rng& rng) const {
        if (n < 1) throw config_error("sample_degree_sequence: n must be >= 1");
        std::vector<int> degrees(static_cast<std::size_t>(n));
        long long total = 0;
        for (auto& d : degrees) {
            d = sample(rng);
            total += d;
        }
        int retries = 0;
        while (total % 2 != 0) {
            if (++retries > 1000)
                throw config_error("sample_degree_sequence: odd total unavoidable");
            total -= degrees.back();
            degrees.back() = sample(rng);
            total += degrees.back();
        }
        return degrees;
    }

    std::string descriptor() const {
        std::ostringstream out;
        out.precision(17);
        switch (kind_) {
            case DegreeKind::poisson:
                out << "poisson:" << param_a_;
                break;
            case DegreeKind::negative_binomial:
                out << "nb:" << static_cast<int>(param_a_) << "," << param_b_;
                break;
            case DegreeKind::regular:
                out << "regular:" << static_cast<int>(param_a_);
                break;
            case DegreeKind::table: {
                out << "table:";
                bool first = true;
                for (std::size_t k = 0; k < pmf_.size(); ++k) {
                    if (pmf_[k] == 0.0) continue;
                    if (!first) out << ",";
                    out << k << "=" << pmf_[k];
                    first = false;
                }
                break;
            }
        }
        return out.str();
    }

private:
    DegreeDistribution(std::vector<double> pmf, DegreeKind kind)
        : pmf_(std::move(pmf)), kind_(kind) {
        normalize();
        check_third_moment_convergence();
        cdf_.resize(pmf_.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < pmf_.size(); ++k) {
            acc += pmf_[k];
            cdf_[k] = acc;
        }
        cdf_.back() = 1.0;
    }

    static void check_unit_interval(double x) {
        if (!(x >= 0.0) || !(x <= 1.0))
            throw config_error("pgf argument must lie in [0, 1]");
    }

    // Extends pmf by the recurrence p_{k+1} = next(k, p_k) until the running
    // tail of k^3 p_k is negligible relative to the accumulated third moment.
    template <class Next>
    static void append_truncated_tail(std::vector<double>& pmf, Next next) {
        constexpr int k_cap = 2'000'000;
        double sum3 = 0.0;
        int quiet = 0;
        for (int k = 0; k < k_cap; ++k) {
            const double pk = pmf[static_cast<std::size_t>(k)];
            const double term3 = static_cast<double>(k) * k * k * pk;
            sum3 += term3;
            const double pk1 = next(k, pk);
            const double term3_next =
                static_cast<double>(k + 1) * (k + 1) * (k + 1) * pk1;
            if (sum3 > 0.0 && term3_next < 1e-15 * sum3) {
                if (++quiet >= 4) return;
            } else {
                quiet = 0;
            }
            pmf.push_back(pk1);
        }
        throw config_error("degree distribution: truncated third moment does not converge");
    }

    void normalize() {
        double total = 0.0;
        for (double p : pmf_) {
            if (p < 0.0) throw config_error("degree distribution: negative mass");
            total += p;
        }
        if (!(total > 0.0)) throw config_error("degree distribution: zero mass");
        for (double& p : pmf_) p /= total;
    }

    void check_third_moment_convergence() const {
        // For a finite table this is automatic; for truncated families the
        // construction above already bounded the tail well under 1e-9.
        double sum3 = 0.0;
        for (std::size_t k = 0; k < pmf_.size(); ++k)
            sum3 += static_cast<double>(k) * k * k * pmf_[k];
        if (!std::isfinite(sum3))
            throw config_error("degree distribution: third moment is not finite");
    }

    std::vector<double> pmf_;
    std::vector<double> cdf_;
    DegreeKind kind_;
    double param_a_ = 0.0;
    double param_b_ = 0.0;
};

inline DegreeDistribution DegreeDistribution::parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw config_error("distribution descriptor: expected '<kind>:<params>'");
    const std::string kind(text.substr(0, colon));
    const std::string args(text.substr(colon + 1));
    try {
        if (kind == "poisson") return poisson(std::stod(args));
        if (kind == "regular") return regular(std::stoi(args));
        if (kind == "nb" || kind == "negative_binomial") {
            const auto comma = args.find(',');
            if (comma == std::string::npos)
                throw config_error("nb descriptor: expected 'nb:r,p'");
            return negative_binomial(std::stoi(args.substr(0, comma)),
                                     std::stod(args.substr(comma + 1)));
        }
        if (kind == "table") {
            std::vector<std::pair<int, double>> entries;
            std::istringstream in(args);
            std::string item;
            while (std::getline(in, item, ',')) {
                const auto eq = item.find('=');
                if (eq == std::string::npos)
                    throw config_error("table descriptor: expected 'k=p' entries");
                entries.emplace_back(std::stoi(item.substr(0, eq)),
                                     std::stod(item.substr(eq + 1)));
            }
            return from_table(entries);
        }
    } catch (const std::logic_error& e) {
        if (dynamic_cast<const config_error*>(&e)) throw;
        throw config_error("distribution descriptor: malformed number in '" +
                           std::string(text) + "'");
    }
    throw config_error("distribution descriptor: unknown kind '" + kind + "'");
}

} // namespace netdiff
