#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "nfc/correlation.hpp"
#include "nfc/dof_analysis.hpp"
#include "nfc/error.hpp"
#include "nfc/estimators.hpp"
#include "nfc/field_synthesis.hpp"
#include "nfc/fitting.hpp"
#include "nfc/matrix_io.hpp"
#include "nfc/scene.hpp"
#include "nfc/wavenumber.hpp"

namespace nfc::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Global {
    std::string scene;
    std::string out = ".";
    std::uint64_t seed = 1;
    int threads = 0;
};

struct CorrelateOpts {
    std::string mode = "analytic";
    double tol = 1e-8;
    std::string format = "csv";
};

struct SampleOpts {
    std::size_t count = 1;
    std::string method = "cholesky";
};

struct SpectrumOpts {
    double eta = 3.0;
    std::string kind = "expected";
    bool four = false;
};

struct DofOpts {
    double threshold = 0.99;
    double c0 = kDefaultCapConstant;
};

struct SweepOpts {
    std::vector<double> snr_db{0, 5, 10, 15, 20};
    std::size_t trials = 100;
    std::vector<std::string> methods{"ls", "omp:20", "subspace", "subspace-weighted", "nfs"};
    NfsOptions nfs;
    std::size_t codebook_az = 16;
    std::size_t codebook_el = 16;
    std::size_t codebook_rings = 4;
    bool normalize = true;
};

struct FitOpts {
    std::string target;
    std::string rays;
    bool synthetic_rays = false;
    std::size_t clusters = 3;
    int max_iter = 100;
    double tol = 1e-6;
    double init_distance = 50.0;
    bool literal_update = false;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

Scene need_scene(const Global &g, bool require_scatterers = true)
{
    if (g.scene.empty())
        throw ConfigError("--scene is required for this command");
    return load_scene(g.scene, require_scatterers);
}

fs::path out_dir(const Global &g)
{
    fs::path p(g.out);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec)
        throw ConfigError("cannot create output directory '" + g.out + "'");
    return p;
}

void write_json(const fs::path &path, const json &j)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    os << j.dump(2) << "\n";
}

std::ofstream open_text(const fs::path &path)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return os;
}

json versioned() { return json{{"format_version", io::kFormatVersion}}; }

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

void warn_regime(const Scene &s, std::ostream &err)
{
    for (std::size_t i = 0; i < s.clusters.size(); ++i)
        if (!analytic_regime_ok(s.clusters[i]))
            err << "warning: scatterer " << i
                << " has radius above 0.1 of its distance; the closed form may be inaccurate\n";
}

int cmd_correlate(const Global &g, const CorrelateOpts &o, std::ostream &out, std::ostream &err)
{
    if (o.mode != "analytic" && o.mode != "oracle" && o.mode != "both")
        throw ConfigError("--mode must be analytic, oracle or both");
    if (o.format != "csv" && o.format != "bin")
        throw ConfigError("--format must be csv or bin");
    if (!(o.tol > 0.0))
        throw ConfigError("--tol must be positive");
    const Scene s = need_scene(g);
    warn_regime(s, err);
    const auto dir = out_dir(g);
    json summary = versioned();
    summary["dim"] = s.array.size();
    summary["mode"] = o.mode;

    auto save = [&](const CorrelationMatrix &R, const std::string &stem) {
        const fs::path p = dir / (stem + (o.format == "bin" ? ".bin" : ".csv"));
        if (o.format == "bin")
            io::write_matrix_binary(p.string(), R.values);
        else
            io::write_matrix_csv(p.string(), R);
        summary["files"].push_back(p.filename().string());
        summary[stem] = {{"hermitian_defect", hermitian_defect(R.values)},
                         {"psd_margin", psd_margin(R.values)}};
    };

    CorrelationMatrix Ra, Ro;
    if (o.mode != "oracle") {
        Ra = assemble_matrix(s.kernel(), s.array, CorrMode::analytic);
        save(Ra, "R_analytic");
    }
    if (o.mode != "analytic") {
        Ro = assemble_matrix(s.kernel(), s.array, CorrMode::oracle, o.tol);
        save(Ro, "R_oracle");
    }
    if (o.mode == "both")
        summary["rel_error"] = relative_error(Ra, Ro);
    write_json(dir / "correlate_summary.json", summary);
    out << "wrote " << summary["files"].size() << " matrix file(s) to " << dir.string() << "\n";
    return kOk;
}

int cmd_sample(const Global &g, const SampleOpts &o, std::ostream &out, std::ostream &err)
{
    if (o.count < 1)
        throw ConfigError("--count must be at least 1");
    SamplerMethod m;
    if (o.method == "cholesky")
        m = SamplerMethod::cholesky;
    else if (o.method == "kl")
        m = SamplerMethod::karhunen_loeve;
    else
        throw ConfigError("--method must be cholesky or kl");
    const Scene s = need_scene(g);
    warn_regime(s, err);
    const auto dir = out_dir(g);
    const auto R = assemble_matrix(s.kernel(), s.array, CorrMode::analytic);
    const ChannelSampler sampler(R.values, m);
    for (std::size_t i = 0; i < o.count; ++i) {
        const auto h = sampler.sample(g.seed + i);
        auto os = open_text(dir / ("h_" + std::to_string(i) + ".csv"));
        io::write_vector_csv(os, h.h, h.seed, h.source_hash);
    }
    out << "wrote " << o.count << " realization(s) to " << dir.string() << "\n";
    return kOk;
}

void write_spectrum_csv(const fs::path &path, const SpectrumGrid &grid)
{
    auto os = open_text(path);
    os << "# format_version=" << io::kFormatVersion << ",rows=k_y,columns=k_z\n";
    os << "k_y";
    for (Eigen::Index j = 0; j < grid.k_z.size(); ++j)
        os << ',' << io::format_double(grid.k_z[j]);
    os << "\n";
    for (Eigen::Index i = 0; i < grid.values.rows(); ++i) {
        os << io::format_double(grid.k_y[i]);
        for (Eigen::Index j = 0; j < grid.values.cols(); ++j)
            os << ',' << io::format_double(grid.values(i, j));
        os << "\n";
    }
}

json spectrum_outputs(const Scene &s, const SpectrumOpts &o, std::uint64_t seed,
                      const fs::path &dir)
{
    if (!(o.eta > 0.0))
        throw ConfigError("--eta must be positive");
    if (o.kind != "expected" && o.kind != "sample")
        throw ConfigError("--kind must be expected or sample");
    const auto R = assemble_matrix(s.kernel(), s.array, CorrMode::analytic);
    SpectrumGrid grid;
    if (o.kind == "expected") {
        grid = expected_spectrum(R.values, s.array, s.wave);
    } else {
        const auto h = sample_channel(R, seed);
        grid = sample_spectrum(h.h, s.array, s.wave);
    }
    write_spectrum_csv(dir / "spectrum.csv", grid);
    PeakOptions po;
    po.neighborhood = o.four ? Neighborhood::four : Neighborhood::eight;
    SpectrumGrid mag = grid;
    mag.values = grid.values.cwiseSqrt();
    const auto peaks = detect_peaks(mag, o.eta, po);
    json j = versioned();
    j["kind"] = o.kind;
    j["eta"] = o.eta;
    j["peaks"] = json::array();
    for (const auto &p : peaks)
        j["peaks"].push_back({{"i", p.i}, {"j", p.j}, {"k_y", p.k_y}, {"k_z", p.k_z},
                              {"power", p.value * p.value}});
    write_json(dir / "peaks.json", j);
    return j;
}

int cmd_spectrum(const Global &g, const SpectrumOpts &o, std::ostream &out, std::ostream &err)
{
    const Scene s = need_scene(g);
    warn_regime(s, err);
    const auto j = spectrum_outputs(s, o, g.seed, out_dir(g));
    out << "detected " << j["peaks"].size() << " peak(s)\n";
    return kOk;
}

json dof_outputs(const Scene &s, const DofOpts &o, const fs::path &dir)
{
    if (!(o.threshold > 0.0) || !(o.threshold < 1.0))
        throw ConfigError("--threshold must lie in (0, 1)");
    const auto R = assemble_matrix(s.kernel(), s.array, CorrMode::analytic);
    const RVector ev = eigenvalues_descending(R.values);
    json j = versioned();
    j["threshold"] = o.threshold;
    j["effective_dof"] = effective_dof(ev, o.threshold);
    j["mutual_information_nats_unit_noise"] = mutual_information(ev, 1.0);
    j["array_radius"] = s.array.half_extent();
    j["scatterers"] = json::array();
    for (const auto &c : s.clusters) {
        const auto bw = bandwidth_bounds(c.radius, s.wave);
        const auto caps = cap_dof_bounds(c.radius, s.array.half_extent(), c.distance(), s.wave, o.c0);
        j["scatterers"].push_back({{"bandwidth_lower", bw.lower},
                                   {"bandwidth_upper", bw.upper},
                                   {"n0", caps.n0},
                                   {"n1", caps.n1},
                                   {"n2", caps.n2}});
    }
    write_json(dir / "dof.json", j);
    auto os = open_text(dir / "eigenvalues.csv");
    io::write_real_vector_csv(os, "eigenvalue", ev);
    return j;
}

int cmd_dof(const Global &g, const DofOpts &o, std::ostream &out, std::ostream &err)
{
    const Scene s = need_scene(g);
    warn_regime(s, err);
    const auto j = dof_outputs(s, o, out_dir(g));
    out << "effective dof " << j["effective_dof"].get<int>() << "\n";
    return kOk;
}

json classify_outputs(const Scene &s, const fs::path &dir)
{
    json j = versioned();
    j["wavelength"] = s.wave.wavelength;
    j["array_radius"] = s.array.half_extent();
    j["scatterers"] = json::array();
    for (const auto &c : s.clusters) {
        const auto r = classify_regime(c.radius, s.array.half_extent(), c.distance(), s.wave);
        json t = {{"classification", to_string(r.classification)},
                  {"negligible_radius", r.negligible_radius},
                  {"near_field_distance", r.near_field_distance},
                  {"distance", c.distance()},
                  {"radius", c.radius}};
        if (std::isfinite(r.negligible_distance))
            t["negligible_distance"] = r.negligible_distance;
        else
            t["negligible_distance"] = nullptr;
        j["scatterers"].push_back(t);
    }
    write_json(dir / "regime.json", j);
    return j;
}

int cmd_classify(const Global &g, std::ostream &out)
{
    const Scene s = need_scene(g);
    const auto j = classify_outputs(s, out_dir(g));
    for (const auto &t : j["scatterers"])
        out << t["classification"].get<std::string>() << "\n";
    return kOk;
}

int cmd_report(const Global &g, const SpectrumOpts &so, const DofOpts &dof, std::ostream &out,
               std::ostream &err)
{
    const Scene s = need_scene(g);
    warn_regime(s, err);
    const auto dir = out_dir(g);
    const auto sj = spectrum_outputs(s, so, g.seed, dir);
    const auto dj = dof_outputs(s, dof, dir);
    classify_outputs(s, dir);
    out << "detected " << sj["peaks"].size() << " peak(s), effective dof "
        << dj["effective_dof"].get<int>() << "\n";
    return kOk;
}

struct Method {
    std::string tag;
    std::string kind;
    std::size_t paths = 0;
};

std::vector<Method> parse_methods(const std::vector<std::string> &names)
{
    std::vector<Method> out;
    for (const auto &n : names) {
        if (n == "ls" || n == "subspace" || n == "subspace-weighted" || n == "nfs" || n == "mmse") {
            out.push_back({n, n, 0});
        } else if (n.rfind("omp:", 0) == 0) {
            long long L = 0;
            try {
                std::size_t pos = 0;
                L = std::stoll(n.substr(4), &pos);
                if (pos != n.size() - 4)
                    L = 0;
            } catch (const std::exception &) {
                L = 0;
            }
            if (L < 1)
                throw ConfigError("method '" + n + "' needs a positive path count");
            out.push_back({n, "omp", static_cast<std::size_t>(L)});
        } else {
            throw ConfigError("unknown method '" + n + "'");
        }
    }
    if (out.empty())
        throw ConfigError("no methods selected");
    return out;
}

int cmd_sweep(const Global &g, const SweepOpts &o, std::ostream &out, std::ostream &err)
{
    if (o.trials < 1)
        throw ConfigError("--trials must be at least 1");
    if (o.snr_db.empty())
        throw ConfigError("--snr needs at least one value");
    const auto methods = parse_methods(o.methods);
    const Scene s = need_scene(g);
    warn_regime(s, err);
    const auto dir = out_dir(g);

    auto R = assemble_matrix(s.kernel(), s.array, CorrMode::analytic);
    if (o.normalize)
        R.values *= static_cast<double>(R.dim()) / R.values.trace().real();
    const ChannelSampler sampler(R.values);
    const SubspaceModel sub(s.array, s.wave);
    Codebook cb;
    for (const auto &m : methods)
        if (m.kind == "omp" && cb.W.size() == 0)
            cb = build_codebook(s.array, s.wave, o.codebook_az, o.codebook_el,
                                default_distance_rings(s.array, s.wave, o.codebook_rings));

    auto csv = open_text(dir / "sweep.csv");
    csv << "method,snr_db,trial,nmse,seed\n";
    std::map<std::string, std::map<std::string, std::vector<double>>> acc;
    for (double snr_db : o.snr_db) {
        const double P = std::pow(10.0, snr_db / 10.0);
        for (std::size_t t = 0; t < o.trials; ++t) {
            const std::uint64_t seed = splitmix64(g.seed + t);
            std::mt19937_64 rng(seed);
            const CVector h = sampler.draw(rng);
            const Observation obs = make_observation(h, P, rng);
            for (const auto &m : methods) {
                EstimatorReport rep;
                if (m.kind == "ls")
                    rep = estimate_ls(obs);
                else if (m.kind == "omp")
                    rep = estimate_omp(obs, cb, m.paths);
                else if (m.kind == "subspace")
                    rep = estimate_subspace(obs, sub, false);
                else if (m.kind == "subspace-weighted")
                    rep = estimate_subspace(obs, sub, true);
                else if (m.kind == "nfs")
                    rep = estimate_nfs(obs, s.array, s.wave, o.nfs, sub);
                else
                    rep = estimate_mmse(obs, R.values);
                csv << m.tag << ',' << io::format_double(snr_db) << ',' << t << ','
                    << io::format_double(rep.nmse) << ',' << seed << "\n";
                acc[m.tag][io::format_double(snr_db)].push_back(rep.nmse);
            }
        }
    }
    json summary = versioned();
    summary["trials"] = o.trials;
    for (const auto &[tag, bysnr] : acc)
        for (const auto &[snr, v] : bysnr) {
            double mean = 0.0;
            for (double x : v)
                mean += x;
            mean /= static_cast<double>(v.size());
            double var = 0.0;
            for (double x : v)
                var += (x - mean) * (x - mean);
            const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
            summary["methods"][tag][snr] = {{"mean", mean}, {"std", sd}};
        }
    write_json(dir / "sweep_summary.json", summary);
    out << "wrote " << o.trials * o.snr_db.size() * methods.size() << " rows to "
        << (dir / "sweep.csv").string() << "\n";
    return kOk;
}

int cmd_fit(const Global &g, const FitOpts &o, std::ostream &out)
{
    const int sources = (!o.target.empty()) + (!o.rays.empty()) + (o.synthetic_rays ? 1 : 0);
    if (sources != 1)
        throw ConfigError("fit needs exactly one of --target, --rays or --synthetic-rays");
    if (o.clusters < 1)
        throw ConfigError("--clusters must be at least 1");
    if (o.max_iter < 1)
        throw ConfigError("--max-iter must be at least 1");
    const Scene s = need_scene(g, false);
    const auto dir = out_dir(g);

    CorrelationMatrix target;
    if (!o.target.empty()) {
        if (!fs::exists(o.target))
            throw ConfigError("target file '" + o.target + "' does not exist");
        target = io::read_matrix(o.target);
    } else if (!o.rays.empty()) {
        std::ifstream is(o.rays);
        if (!is)
            throw ConfigError("cannot open ray table '" + o.rays + "'");
        target = ray_cluster_target(read_ray_table(is), s.array, s.wave);
    } else {
        target = ray_cluster_target(synthetic_ray_table(g.seed), s.array, s.wave);
    }
    const FitProblem problem = make_fit_problem(target, s.array, s.wave, o.clusters);
    InitOptions init;
    init.distance = o.init_distance;
    const RVector x0 = initial_guess(problem, init);
    QuasiNewtonOptions qn;
    qn.max_iter = o.max_iter;
    qn.loss_tol = o.tol;
    qn.literal_update = o.literal_update;
    const FitResult res = quasi_newton_fit(problem, x0, qn);

    Scene fitted = s;
    fitted.clusters = decode_clusters(res.x, problem);
    json j = versioned();
    j["loss"] = res.loss;
    j["iterations"] = res.trace.iterates.size() - 1;
    j["converged"] = res.trace.converged;
    j["stop_reason"] = res.trace.stop_reason;
    j["scene"] = scene_to_json(fitted);
    write_json(dir / "fit.json", j);
    auto os = open_text(dir / "fit_trace.csv");
    write_fit_trace_csv(os, res.trace);
    out << "final loss " << io::format_double(res.loss) << " after "
        << res.trace.iterates.size() - 1 << " iteration(s)\n";
    return kOk;
}

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Near-field random-field channel toolkit"};
    app.require_subcommand(1);
    Global g;
    app.add_option("--scene", g.scene, "Scene JSON file");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--seed", g.seed, "Base random seed");
    app.add_option("--threads", g.threads, "Worker thread cap")->check(CLI::NonNegativeNumber);

    CorrelateOpts co;
    auto *correlate = app.add_subcommand("correlate", "Assemble correlation matrices");
    correlate->add_option("--mode", co.mode, "analytic, oracle or both");
    correlate->add_option("--tol", co.tol, "Oracle quadrature tolerance");
    correlate->add_option("--format", co.format, "csv or bin");

    SampleOpts so;
    auto *sample = app.add_subcommand("sample", "Draw channel realizations");
    sample->add_option("--count", so.count, "Number of realizations");
    sample->add_option("--method", so.method, "cholesky or kl");

    SpectrumOpts sp;
    auto add_spectrum_opts = [&sp](CLI::App *c) {
        c->add_option("--eta", sp.eta, "Peak threshold over the mean magnitude");
        c->add_option("--kind", sp.kind, "expected or sample");
        c->add_flag("--four-neighbors", sp.four, "Compare against 4 neighbours only");
    };
    auto *spectrum = app.add_subcommand("spectrum", "Wavenumber spectrum and peaks");
    add_spectrum_opts(spectrum);

    DofOpts dof;
    auto add_dof_opts = [&dof](CLI::App *c) {
        c->add_option("--threshold", dof.threshold, "Eigenvalue mass threshold");
        c->add_option("--c0", dof.c0, "Constant of the sphere DoF bound");
    };
    auto *dofc = app.add_subcommand("dof", "Degrees-of-freedom report");
    add_dof_opts(dofc);

    auto *classify = app.add_subcommand("classify", "Near/far-field regime per scatterer");

    auto *report = app.add_subcommand("report", "Spectrum, DoF and regime outputs together");
    add_spectrum_opts(report);
    add_dof_opts(report);

    SweepOpts sw;
    auto *sweep = app.add_subcommand("sweep", "Estimator NMSE sweep");
    sweep->add_option("--snr", sw.snr_db, "SNR grid in dB")->delimiter(',');
    sweep->add_option("--trials", sw.trials, "Trials per SNR");
    sweep->add_option("--methods", sw.methods,
                      "ls, omp:L, subspace, subspace-weighted, nfs, mmse")
        ->delimiter(',');
    sweep->add_option("--eta", sw.nfs.eta, "Peak threshold of the NFS estimator");
    sweep->add_option("--nfs-distance", sw.nfs.distance, "Fixed cluster distance");
    sweep->add_option("--nfs-radius", sw.nfs.radius, "Fixed cluster radius");
    sweep->add_option("--nfs-concentration", sw.nfs.concentration, "Fixed concentration");
    sweep->add_option("--nfs-mix", sw.nfs.prior_mix, "Isotropic share of the NFS prior");
    sweep->add_option("--codebook-az", sw.codebook_az, "Codebook azimuth cosines");
    sweep->add_option("--codebook-el", sw.codebook_el, "Codebook elevation cosines");
    sweep->add_option("--codebook-rings", sw.codebook_rings, "Codebook distance rings");

    FitOpts fo;
    auto *fit = app.add_subcommand("fit", "Quasi-Newton model fit");
    fit->add_option("--target", fo.target, "Target matrix (.csv or .bin)");
    fit->add_option("--rays", fo.rays, "Ray table CSV (power,azimuth_deg,elevation_deg)");
    fit->add_flag("--synthetic-rays", fo.synthetic_rays, "Use the built-in 23x20 ray table");
    fit->add_option("--clusters", fo.clusters, "Model clusters");
    fit->add_option("--max-iter", fo.max_iter, "Iteration cap");
    fit->add_option("--tol", fo.tol, "Loss tolerance");
    fit->add_option("--init-distance", fo.init_distance, "Initial cluster distance");
    fit->add_flag("--literal-update", fo.literal_update, "Use the V H V^T recursion");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }

#ifdef _OPENMP
    if (g.threads > 0)
        omp_set_num_threads(g.threads);
#endif

    try {
        if (correlate->parsed())
            return cmd_correlate(g, co, out, err);
        if (sample->parsed())
            return cmd_sample(g, so, out, err);
        if (spectrum->parsed())
            return cmd_spectrum(g, sp, out, err);
        if (dofc->parsed())
            return cmd_dof(g, dof, out, err);
        if (classify->parsed())
            return cmd_classify(g, out);
        if (report->parsed())
            return cmd_report(g, sp, dof, out, err);
        if (sweep->parsed())
            return cmd_sweep(g, sw, out, err);
        if (fit->parsed())
            return cmd_fit(g, fo, out);
    } catch (const NumericalError &e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalError;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }
    return kConfigError;
}

}  // namespace nfc::cli
