#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string cli = NETDIFF_CLI_PATH;

int run(const std::string& args) {
    const std::string command = cli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("netdiff_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("simulate: identical seed gives byte-identical outputs") {
    const auto dir1 = fresh_dir("sim1");
    const auto dir2 = fresh_dir("sim2");
    const std::string base =
        "simulate --dist poisson:5 --n 500 --beta 0.5 --alpha-s 0.9 --T 1 --seed 42 --out ";
    CHECK(run(base + dir1.string()) == 0);
    CHECK(run(base + dir2.string()) == 0);
    CHECK(slurp(dir1 / "trajectory.csv") == slurp(dir2 / "trajectory.csv"));
    CHECK(slurp(dir1 / "run.json") == slurp(dir2 / "run.json"));

    const auto j = json::parse(slurp(dir1 / "run.json"));
    CHECK(j.at("seed") == 42);
    CHECK(j.at("config").at("dist") == "poisson:5");
    CHECK(j.at("events").get<int>() > 0);

    const std::string header = slurp(dir1 / "trajectory.csv").substr(0, 21);
    CHECK(header == "t,node,dXS,dXSI,dXSS\n");
}

TEST_CASE("simulate: different seed changes the log") {
    const auto dir1 = fresh_dir("sim3");
    const auto dir2 = fresh_dir("sim4");
    CHECK(run("simulate --dist poisson:5 --n 500 --seed 1 --out " + dir1.string()) == 0);
    CHECK(run("simulate --dist poisson:5 --n 500 --seed 2 --out " + dir2.string()) == 0);
    CHECK(slurp(dir1 / "trajectory.csv") != slurp(dir2 / "trajectory.csv"));
}

TEST_CASE("compare: output independent of --threads, exit reflects tolerances") {
    const auto dir1 = fresh_dir("cmp1");
    const auto dir2 = fresh_dir("cmp2");
    const std::string base =
        "compare --dist poisson:5 --n 500 --beta 0.5 --alpha-s 0.9 --T 0.6 --replicas 120 "
        "--checkpoints 0.3,0.6 --seed 99 --out ";
    const int code1 = run(base + dir1.string() + " --threads 1");
    const int code2 = run(base + dir2.string() + " --threads 2");
    CHECK(code1 == code2);
    CHECK((code1 == 0 || code1 == 2));
    CHECK(slurp(dir1 / "compare.json") == slurp(dir2 / "compare.json"));

    const auto j = json::parse(slurp(dir1 / "compare.json"));
    CHECK(j.at("checkpoints").size() == 2);
    CHECK(j.at("checkpoints")[0].contains("mean_z"));
    CHECK(j.at("checkpoints")[0].contains("cov_emp"));
    CHECK((code1 == 0) == j.at("pass").get<bool>());
}

TEST_CASE("lln: frozen dynamics produce constant columns") {
    const auto dir = fresh_dir("lln");
    CHECK(run("lln --dist poisson:5 --beta 0 --alpha-s 0.9 --T 1 --h 0.01 --out " +
              dir.string()) == 0);
    std::ifstream in(dir / "lln.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,xS,xSI,xSS,theta,infected_fraction");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::istringstream fields(line);
        std::string t, xs;
        std::getline(fields, t, ',');
        std::getline(fields, xs, ',');
        CHECK(std::stod(xs) == doctest::Approx(0.9).epsilon(1e-14));
    }
    CHECK(rows == 101);
}

TEST_CASE("fclt: writes rate/integral/covariance table and ellipses") {
    const auto dir = fresh_dir("fclt");
    CHECK(run("fclt --dist poisson:5 --n 1000 --beta 0.5 --alpha-s 0.9 --T 1 --out " +
              dir.string()) == 0);
    const std::string head = slurp(dir / "fclt.csv").substr(0, 200);
    CHECK(head.find("v_S,v_S_SI,v_S_SS,v_SI,v_SI_SS,v_SS") != std::string::npos);
    CHECK(head.find("Sigma_S") != std::string::npos);
    const std::string ellipses = slurp(dir / "ellipses.csv");
    CHECK(ellipses.substr(0, 22) == "t,cx,cy,a,b,angle_rad\n");
}

TEST_CASE("profile: grid output and plot script") {
    const auto dir = fresh_dir("profile");
    CHECK(run("profile --dist poisson:6 --alpha-s 0.9 --beta-grid 0:1:5 --T 2 "
              "--time-points 11 --plot-script --out " +
              dir.string()) == 0);
    std::ifstream in(dir / "profile.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.substr(0, 5) == "beta,");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5);
    CHECK(fs::exists(dir / "profile.gp"));
}

TEST_CASE("cost: json report for both methods") {
    const auto dir1 = fresh_dir("cost1");
    CHECK(run("cost --dist poisson:5 --n 400 --beta 0.5 --alpha-s 0.9 --T 2 --gamma 1 "
              "--replicas 80 --seed 3 --method monte_carlo --out " +
              dir1.string()) == 0);
    const auto mc = json::parse(slurp(dir1 / "cost.json"));
    CHECK(mc.at("method") == "monte_carlo");
    CHECK(mc.at("c").get<double>() == doctest::Approx(1.0 / 400.0));
    CHECK(mc.contains("log_std_error"));

    const auto dir2 = fresh_dir("cost2");
    CHECK(run("cost --dist poisson:5 --n 400 --beta 0.5 --alpha-s 0.9 --T 2 --gamma 1 "
              "--seed 3 --method gaussian --out " +
              dir2.string()) == 0);
    const auto gauss = json::parse(slurp(dir2 / "cost.json"));
    CHECK(gauss.at("method") == "gaussian");
    CHECK(std::abs(mc.at("log_value").get<double>() -
                   gauss.at("log_value").get<double>()) < 0.2);
}

TEST_CASE("config round trip: run.json reproduces the resolved config") {
    const auto dir1 = fresh_dir("rt1");
    CHECK(run("lln --dist nb:2,0.75 --beta 0.3 --alpha-s 0.8 --T 1.5 --h 0.005 --out " +
              dir1.string()) == 0);
    const auto j = json::parse(slurp(dir1 / "run.json"));
    const auto cfg = j.at("config");

    // rebuild the command line from the embedded config and rerun
    const auto dir2 = fresh_dir("rt2");
    std::ostringstream cmd;
    cmd << cfg.at("command").get<std::string>() << " --dist "
        << cfg.at("dist").get<std::string>() << " --n " << cfg.at("n").get<int>()
        << " --beta " << cfg.at("beta").get<double>() << " --alpha-s "
        << cfg.at("alpha_s").get<double>() << " --T " << cfg.at("T").get<double>()
        << " --h " << cfg.at("h").get<double>() << " --out " << dir2.string();
    CHECK(run(cmd.str()) == 0);
    const auto j2 = json::parse(slurp(dir2 / "run.json"));
    CHECK(cfg == j2.at("config"));
    CHECK(slurp(dir1 / "lln.csv") == slurp(dir2 / "lln.csv"));
}

TEST_CASE("exit codes: usage, config, singularity") {
    CHECK(run("simulate --dist poisson:5 --n 100") == 1);       // missing --seed
    CHECK(run("bogus-subcommand") == 1);                        // unknown command
    CHECK(run("simulate --seed 1 --definitely-not-a-flag") == 1);
    const auto dir = fresh_dir("err");
    CHECK(run("simulate --dist zeta:2 --seed 1 --out " + dir.string()) == 1);
    CHECK(run("simulate --dist poisson:-4 --seed 1 --out " + dir.string()) == 1);
    // susceptible share at the singular floor from the start
    CHECK(run("lln --dist poisson:5 --beta 0.5 --alpha-s 1e-13 --T 1 --out " +
              dir.string()) == 3);
}

TEST_CASE("config file provides defaults, flags override") {
    const auto dir = fresh_dir("cfgfile");
    {
        std::ofstream cfg(dir / "run.ini");
        cfg << "dist = \"poisson:4\"\nbeta = 0.25\nalpha-s = 0.9\nT = 1.0\nh = 0.01\n";
    }
    CHECK(run("lln --config " + (dir / "run.ini").string() + " --out " + dir.string()) == 0);
    const auto j = json::parse(slurp(dir / "run.json"));
    CHECK(j.at("config").at("dist") == "poisson:4");
    CHECK(j.at("config").at("beta").get<double>() == doctest::Approx(0.25));

    CHECK(run("lln --config " + (dir / "run.ini").string() + " --beta 0.5 --out " +
              dir.string()) == 0);
    const auto j2 = json::parse(slurp(dir / "run.json"));
    CHECK(j2.at("config").at("beta").get<double>() == doctest::Approx(0.5));
}

TEST_CASE("environment fallback for worker threads") {
    const auto dir1 = fresh_dir("env1");
    const auto dir2 = fresh_dir("env2");
    const std::string base =
        "compare --dist poisson:5 --n 300 --T 0.5 --replicas 40 --checkpoints 0.25 "
        "--seed 11 --out ";
    const int c1 = std::system(
        ("NETDIFF_THREADS=1 " + cli + " " + base + dir1.string() + " >/dev/null 2>&1").c_str());
    const int c2 = std::system(
        ("NETDIFF_THREADS=2 " + cli + " " + base + dir2.string() + " >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(c1) == WEXITSTATUS(c2));
    CHECK(slurp(dir1 / "compare.json") == slurp(dir2 / "compare.json"));
}
