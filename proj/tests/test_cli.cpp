#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "s2cubic/cli.hpp"
#include "s2cubic/io.hpp"

using namespace s2c;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream o, e;
    const int c = cli::run(args, o, e);
    return {c, o.str(), e.str()};
}

const std::string root = "cli_test_out";

// fixture written once by find-T
const std::string& fixture()
{
    static const std::string path = [] {
        const Run r = run({"find-T", "--out", root + "/ft"});
        REQUIRE(r.code == 0);
        return root + "/ft/fixture_T.json";
    }();
    return path;
}

std::size_t csv_rows(const fs::path& p)
{
    const std::string t = io::read_text(p);
    return static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n')) - 1;
}

}  // namespace

TEST_CASE("find-T writes a fixture and a comparison")
{
    const auto& fx = fixture();
    const auto f = io::read_fixture(fx);
    CHECK(std::abs(f.T - f.separatrix_T) <= 1e-4);
    const auto rep = io::Json::parse(io::read_text(root + "/ft/find_T.json"));
    CHECK(rep["pass"] == true);
    CHECK(rep["fixture"]["hash"] == f.hash());
    CHECK(csv_rows(root + "/ft/probe_sweep.csv") == 50);

    const Run coarse = run({"find-T", "--tol", "1e-2", "--out", root + "/ft_coarse"});
    CHECK(coarse.code == 0);
    CHECK(std::abs(io::read_fixture(root + "/ft_coarse/fixture_T.json").T - f.T) <= 1e-2);
    CHECK(run({"find-T", "--out", "/dev/null/sub"}).code == 2);
    CHECK(run({"find-T", "--tol", "0", "--out", root + "/ft_zero"}).code == 2);
}

TEST_CASE("phase-portrait bundle")
{
    const Run r = run({"phase-portrait", "--out", root + "/pp"});
    CHECK(r.code == 0);
    CHECK(csv_rows(root + "/pp/fixed_points.csv") == 4);
    int seps = 0;
    for (const auto& e : fs::directory_iterator(root + "/pp"))
        if (e.path().filename().string().rfind("separatrix_", 0) == 0) ++seps;
    CHECK(seps == 4);
    const auto short_rep = io::Json::parse(io::read_text(root + "/pp/fixed_points.json"));
    CHECK(run({"phase-portrait", "--qmax", "100", "--out", root + "/pp100"}).code == 0);
    const auto long_rep = io::Json::parse(io::read_text(root + "/pp100/fixed_points.json"));
    const double T = io::read_fixture(fixture()).T;
    CHECK(std::abs(long_rep["T_estimate"]["value"].get<double>() - T) <
          std::abs(short_rep["T_estimate"]["value"].get<double>() - T));
    CHECK(run({"phase-portrait", "--branch", "up", "--out", root + "/pp"}).code == 2);
    CHECK(run({"phase-portrait", "--branch", "pos", "--out", root + "/pp_pos"}).code == 0);
}

TEST_CASE("solve-psi and build-metric")
{
    CHECK(run({"solve-psi", "--tau", "0.5T", "--fixture", fixture(), "--out", root + "/psi"}).code == 0);
    CHECK(io::read_text(root + "/psi/psi_profile.csv").rfind("y,psi,psi1,psi2\n", 0) == 0);
    CHECK(io::read_text(root + "/psi/trajectory.csv").rfind("t,x,x1,x2\n", 0) == 0);
    CHECK(run({"solve-psi", "--tau", "abc", "--fixture", fixture(), "--out", root + "/psi"}).code == 2);
    CHECK(run({"solve-psi", "--tau", "1.2T", "--fixture", fixture(), "--out", root + "/psi_bad"}).code == 1);

    CHECK(run({"build-metric", "--family", "A", "--tau", "0", "--fixture", fixture(), "--out", root + "/m0"}).code == 0);
    const auto m = io::Json::parse(io::read_text(root + "/m0/metric.json"));
    CHECK(std::abs(m["curvature_range"]["min"].get<double>() - 1.0) < 1e-6);
    CHECK(std::abs(m["curvature_range"]["max"].get<double>() - 1.0) < 1e-6);
    CHECK(run({"build-metric", "--family", "B", "--tau", "0.5T", "--b", "-1", "--fixture", fixture(), "--out", root + "/mb"})
              .code == 1);
    CHECK(run({"build-metric", "--family", "C", "--out", root + "/mc"}).code == 2);
}

TEST_CASE("verify outcomes")
{
    CHECK(run({"verify", "--family", "A", "--tau", "0.5T", "--fixture", fixture(), "--out", root + "/va"}).code == 0);
    const Run in_band =
        run({"verify", "--family", "B", "--tau", "0.5T", "--b", "-1", "--fixture", fixture(), "--out", root + "/vb"});
    CHECK(in_band.code == 1);
    const auto rb = io::Json::parse(io::read_text(root + "/vb/verify.json"));
    CHECK(rb["admissibility"]["failure"].get<std::string>().find("degenerate_metric") == 0);
    CHECK(run({"verify", "--family", "GC", "--fixture", fixture(), "--out", root + "/vg"}).code == 0);
    const auto rg = io::Json::parse(io::read_text(root + "/vg/verify.json"));
    CHECK(rg.contains("gc_match"));
    CHECK(rg["gc_match"]["fixture"]["hash"] == io::read_fixture(fixture()).hash());

    // a tampered fixture is refused
    auto j = io::Json::parse(io::read_text(fixture()));
    j["T"] = 0.6;
    io::write_json(root + "/tampered.json", j);
    CHECK(run({"verify", "--fixture", root + "/tampered.json", "--out", root + "/vt"}).code == 2);
}

TEST_CASE("verify is byte-identical across runs and worker counts")
{
    const std::vector<std::string> base = {"verify", "--family", "B", "--tau", "0.8T", "--seeds", "30", "--trajectories", "4",
                                           "--fixture", fixture()};
    auto with = [&](const std::string& out, const std::string& workers) {
        auto a = base;
        a.insert(a.end(), {"--out", root + "/" + out, "--workers", workers});
        return run(a).code;
    };
    CHECK(with("det1", "1") == 0);
    CHECK(with("det2", "0") == 0);
    CHECK(with("det3", "1") == 0);
    for (const char* f : {"verify.json", "flow_geodesic.csv", "flow_conservative.csv"}) {
        const std::string a = io::read_text(root + "/det1/" + f);
        CHECK(a == io::read_text(root + "/det2/" + f));
        CHECK(a == io::read_text(root + "/det3/" + f));
    }
}

TEST_CASE("sweep rows")
{
    const Run r = run({"sweep", "--tau", "0,0.3T,1.2T", "--b", "0", "--fixture", fixture(), "--out", root + "/sw"});
    CHECK(r.code == 1);  // the 1.2T row fails and is flagged
    const std::string t = io::read_text(root + "/sw/sweep.csv");
    CHECK(csv_rows(root + "/sw/sweep.csv") == 3);
    CHECK(t.find("0,0,-1.0000000000000004,-1,") != std::string::npos);
    CHECK(t.find(",ok\n") != std::string::npos);
    CHECK(csv_rows(root + "/sw/sweep_b.csv") == 2);
    CHECK(run({"sweep", "--tau", "", "--out", root + "/sw"}).code == 2);
    CHECK(run({"sweep", "--out", root + "/sw"}).code == 2);
}

TEST_CASE("gc-match and help")
{
    CHECK(run({"gc-match", "--fixture", fixture(), "--out", root + "/gm"}).code == 0);
    const auto g = io::Json::parse(io::read_text(root + "/gm/gc_match.json"));
    CHECK(g["fit"]["residual"].get<double>() <= 1e-3);
    CHECK(csv_rows(root + "/gm/gc_matched_profiles.csv") == 401);

    const Run h = run({"verify", "--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("t,phi,y,p_phi,p_y,H,F") != std::string::npos);
    CHECK(run({"sweep", "--help"}).out.find("b_upper_phi") != std::string::npos);
    CHECK(run({}).code == 2);
    CHECK(run({"nonsense"}).code == 2);
}
