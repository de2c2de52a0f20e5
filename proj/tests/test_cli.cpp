#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "nfc/matrix_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "nfc");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = nfc::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p)
{
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

json read_json(const fs::path &p) { return json::parse(slurp(p)); }

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string &name)
        : path(fs::temp_directory_path() / ("nfc_test_cli_" + name))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

fs::path write_scene(const fs::path &dir, double radius = 1.0)
{
    json j = {{"wavelength", 0.05},
              {"array", {{"ny", 5}, {"nz", 5}, {"dy", 0.0125}, {"dz", 0.0125}}},
              {"scatterers",
               {{{"center", {40, 15, -10}},
                 {"normal", {-40, -15, 10}},
                 {"radius", radius},
                 {"concentration", 0.0},
                 {"power", 1.0}},
                {{"center", {30, -20, 20}},
                 {"normal", {-1, 1, -1}},
                 {"radius", 0.5},
                 {"concentration", 1.0},
                 {"power", 0.5}}}}};
    const fs::path p = dir / "scene.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

}  // namespace

TEST_CASE("help and usage errors")
{
    CHECK(run_cli({"--help"}).code == 0);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"bogus"}).code == 2);
    CHECK(run_cli({"correlate", "--no-such-flag"}).code == 2);
}

TEST_CASE("missing or invalid scene gives a config error")
{
    TempDir t("scene");
    const auto r = run_cli({"--scene", (t.path / "nope.json").string(), "correlate"});
    CHECK(r.code == 2);
    CHECK(r.err.find("nope.json") != std::string::npos);
    CHECK(run_cli({"correlate"}).code == 2);
    std::ofstream(t.path / "bad.json") << R"({"wavelength": 0.05})";
    CHECK(run_cli({"--scene", (t.path / "bad.json").string(), "correlate"}).code == 2);
}

TEST_CASE("correlate writes matrices and a summary")
{
    TempDir t("correlate");
    const auto scene = write_scene(t.path);
    const auto out = t.path / "out";
    const auto r = run_cli({"--scene", scene.string(), "--out", out.string(), "correlate",
                            "--mode", "both", "--tol", "1e-6"});
    REQUIRE(r.code == 0);
    const auto summary = read_json(out / "correlate_summary.json");
    CHECK(summary["format_version"] == 1);
    CHECK(summary["dim"] == 25);
    CHECK(summary["rel_error"].get<double>() < 1e-2);
    CHECK(summary["R_analytic"]["hermitian_defect"].get<double>() < 1e-14);
    const auto Ra = nfc::io::read_matrix((out / "R_analytic.csv").string());
    CHECK(Ra.provenance == nfc::Provenance::analytic);
    CHECK(Ra.dim() == 25);
    const auto Ro = nfc::io::read_matrix((out / "R_oracle.csv").string());
    CHECK(Ro.provenance == nfc::Provenance::oracle);

    const auto bin = t.path / "bin";
    REQUIRE(run_cli({"--scene", scene.string(), "--out", bin.string(), "correlate", "--format",
                     "bin"})
                .code == 0);
    CHECK(nfc::io::read_matrix((bin / "R_analytic.bin").string()).values == Ra.values);

    CHECK(run_cli({"--scene", scene.string(), "correlate", "--mode", "magic"}).code == 2);
}

TEST_CASE("large radius triggers a warning")
{
    TempDir t("warn");
    const auto scene = write_scene(t.path, 20.0);
    const auto r = run_cli({"--scene", scene.string(), "--out", t.path.string(), "correlate"});
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
}

TEST_CASE("sample is deterministic per seed")
{
    TempDir t("sample");
    const auto scene = write_scene(t.path);
    const auto a = t.path / "a", b = t.path / "b", c = t.path / "c";
    REQUIRE(run_cli({"--scene", scene.string(), "--out", a.string(), "--seed", "9", "sample",
                     "--count", "2"})
                .code == 0);
    REQUIRE(run_cli({"--scene", scene.string(), "--out", b.string(), "--seed", "9", "sample",
                     "--count", "2"})
                .code == 0);
    REQUIRE(run_cli({"--scene", scene.string(), "--out", c.string(), "--seed", "10", "sample",
                     "--method", "kl"})
                .code == 0);
    CHECK(slurp(a / "h_0.csv") == slurp(b / "h_0.csv"));
    CHECK(slurp(a / "h_1.csv") != slurp(a / "h_0.csv"));
    CHECK(slurp(a / "h_0.csv").find("seed=9") != std::string::npos);
    std::ifstream is(a / "h_1.csv");
    CHECK(nfc::io::read_vector_csv(is).size() == 25);
    CHECK(run_cli({"--scene", scene.string(), "sample", "--method", "qr"}).code == 2);
}

TEST_CASE("spectrum, dof, classify and report outputs")
{
    TempDir t("report");
    const auto scene = write_scene(t.path);
    const auto out = t.path.string();
    REQUIRE(run_cli({"--scene", scene.string(), "--out", out, "spectrum", "--eta", "2"}).code == 0);
    const auto peaks = read_json(t.path / "peaks.json");
    CHECK(peaks["peaks"].is_array());
    CHECK(fs::exists(t.path / "spectrum.csv"));

    REQUIRE(run_cli({"--scene", scene.string(), "--out", out, "dof"}).code == 0);
    const auto dof = read_json(t.path / "dof.json");
    CHECK(dof["effective_dof"].get<int>() >= 1);
    CHECK(dof["scatterers"].size() == 2);
    CHECK(run_cli({"--scene", scene.string(), "dof", "--threshold", "1.5"}).code == 2);

    const auto r = run_cli({"--scene", scene.string(), "--out", out, "classify"});
    REQUIRE(r.code == 0);
    const auto regime = read_json(t.path / "regime.json");
    CHECK(regime["scatterers"][0]["classification"] == "extended-scatterer-near");

    fs::remove(t.path / "dof.json");
    REQUIRE(run_cli({"--scene", scene.string(), "--out", out, "report"}).code == 0);
    CHECK(fs::exists(t.path / "dof.json"));
    CHECK(fs::exists(t.path / "regime.json"));
}

TEST_CASE("sweep output and common random numbers")
{
    TempDir t("sweep");
    const auto scene = write_scene(t.path);
    const auto a = t.path / "a", b = t.path / "b";
    const std::vector<std::string> common = {"sweep", "--snr", "0,10", "--trials", "3",
                                             "--methods", "ls,omp:4,subspace-weighted,nfs,mmse",
                                             "--codebook-az", "6", "--codebook-el", "6",
                                             "--codebook-rings", "2"};
    auto args = std::vector<std::string>{"--scene", scene.string(), "--out", a.string()};
    args.insert(args.end(), common.begin(), common.end());
    REQUIRE(run_cli(args).code == 0);
    args[3] = b.string();
    REQUIRE(run_cli(args).code == 0);
    CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));

    std::istringstream csv(slurp(a / "sweep.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "method,snr_db,trial,nmse,seed");
    int rows = 0;
    while (std::getline(csv, line))
        ++rows;
    CHECK(rows == 2 * 3 * 5);
    const auto summary = read_json(a / "sweep_summary.json");
    CHECK(summary["methods"]["ls"]["10"]["mean"].get<double>() > 0.0);
    CHECK(summary["methods"].contains("omp:4"));

    CHECK(run_cli({"--scene", scene.string(), "sweep", "--methods", "omp:0"}).code == 2);
    CHECK(run_cli({"--scene", scene.string(), "sweep", "--methods", "magic"}).code == 2);
}

TEST_CASE("fit from each target source")
{
    TempDir t("fit");
    const auto scene = write_scene(t.path);
    const auto dir = t.path.string();
    REQUIRE(run_cli({"--scene", scene.string(), "--out", dir, "correlate"}).code == 0);
    REQUIRE(run_cli({"--scene", scene.string(), "--out", dir, "fit", "--target",
                     (t.path / "R_analytic.csv").string(), "--clusters", "2", "--max-iter", "5"})
                .code == 0);
    const auto fit = read_json(t.path / "fit.json");
    CHECK(fit["iterations"].get<int>() <= 5);
    CHECK(fit["scene"]["scatterers"].size() == 2);
    CHECK(fs::exists(t.path / "fit_trace.csv"));

    std::ofstream(t.path / "rays.csv") << "power,azimuth_deg,elevation_deg\n1,10,5\n0.5,-30,0\n";
    CHECK(run_cli({"--scene", scene.string(), "--out", dir, "fit", "--rays",
                   (t.path / "rays.csv").string(), "--clusters", "1", "--max-iter", "3"})
              .code == 0);
    CHECK(run_cli({"--scene", scene.string(), "--out", dir, "fit", "--synthetic-rays",
                   "--clusters", "1", "--max-iter", "2"})
              .code == 0);

    CHECK(run_cli({"--scene", scene.string(), "fit"}).code == 2);
    CHECK(run_cli({"--scene", scene.string(), "fit", "--synthetic-rays", "--rays", "x.csv"})
              .code == 2);
    CHECK(run_cli({"--scene", scene.string(), "fit", "--target", "missing.csv"}).code == 2);
}
