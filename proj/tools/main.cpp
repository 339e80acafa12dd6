// qishdr: simulate QIS exposure stacks, reconstruct HDR flux maps, and run
// SNR / dynamic-range analyses from the command line.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qishdr/analysis.hpp"
#include "qishdr/hdr_fusion.hpp"
#include "qishdr/io_formats.hpp"
#include "qishdr/ldr_recon.hpp"
#include "qishdr/qis_sim.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double parse_seconds(const std::string& text) {
    static const std::vector<std::pair<std::string, double>> suffixes = {
        {"ns", 1e-9}, {"us", 1e-6}, {"\xc2\xb5s", 1e-6}, {"ms", 1e-3}, {"s", 1.0}};
    for (const auto& [suffix, mult] : suffixes) {
        if (text.size() > suffix.size() &&
            text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0) {
            const std::string num = text.substr(0, text.size() - suffix.size());
            // "s" alone must not swallow the "ms"/"us"/"ns" forms.
            if (suffix == "s" && !num.empty() &&
                (num.back() == 'm' || num.back() == 'u' || num.back() == 'n'))
                continue;
            try {
                std::size_t used = 0;
                const double v = std::stod(num, &used);
                if (used != num.size()) throw UsageError("bad duration: " + text);
                return v * mult;
            } catch (const std::exception&) {
                throw UsageError("bad duration: " + text);
            }
        }
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw UsageError("bad duration: " + text);
        return v;  // bare number = seconds
    } catch (const std::exception&) {
        throw UsageError("bad duration: " + text);
    }
}

/// "75us:10,375us:10,1875us:10" -> exposure groups.
std::vector<qishdr::ExposureGroup> parse_exposures(const std::string& text) {
    std::vector<qishdr::ExposureGroup> groups;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const std::size_t colon = item.find(':');
        if (item.empty() || colon == std::string::npos)
            throw UsageError("bad exposure entry \"" + item + "\" (expected seconds:count)");
        qishdr::ExposureGroup g;
        g.exposure_s = parse_seconds(item.substr(0, colon));
        try {
            g.frames = std::stoi(item.substr(colon + 1));
        } catch (const std::exception&) {
            throw UsageError("bad frame count in \"" + item + "\"");
        }
        groups.push_back(g);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (groups.empty()) throw UsageError("empty exposure schedule");
    return groups;
}

/// "1e-2:1e5:512" -> log-spaced grid.
std::vector<double> parse_grid(const std::string& text) {
    const std::size_t c1 = text.find(':');
    const std::size_t c2 = c1 == std::string::npos ? std::string::npos : text.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw UsageError("bad grid \"" + text + "\" (expected lo:hi:n)");
    try {
        const double lo = std::stod(text.substr(0, c1));
        const double hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        const int n = std::stoi(text.substr(c2 + 1));
        if (n < 2) throw UsageError("grid needs at least 2 points");
        return qishdr::log_grid(lo, hi, n);
    } catch (const qishdr::DomainError& e) {
        throw UsageError(std::string("bad grid: ") + e.what());
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception&) {
        throw UsageError("bad grid \"" + text + "\"");
    }
}

int bits_to_clip_level(int bits) {
    if (bits < 1 || bits > 8) throw UsageError("--bits must be in [1, 8]");
    return (1 << bits) - 1;
}

class ManifestWriter {
public:
    ManifestWriter(std::string subcommand, std::uint64_t seed = 0)
        : start_(std::chrono::steady_clock::now()), seed_(seed) {
        manifest_["subcommand"] = std::move(subcommand);
        manifest_["tool_version"] = QISHDR_VERSION;
    }

    json& parameters() { return manifest_["parameters"]; }
    json& extra() { return manifest_; }
    void add_input(const fs::path& p) { manifest_["inputs"].push_back(p.string()); }
    void add_output(const fs::path& p) { manifest_["outputs"].push_back(p.string()); }

    /// Writes <output>.manifest.json next to the primary output.
    void write(const fs::path& primary_output) {
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_);
        manifest_["seed"] = seed_;
        manifest_["wall_clock_seconds"] = elapsed.count();
        const fs::path path = primary_output.string() + ".manifest.json";
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw qishdr::IoError("cannot write manifest " + path.string());
        out << manifest_.dump(2) << "\n";
    }

private:
    std::chrono::steady_clock::time_point start_;
    json manifest_;
    std::uint64_t seed_;
};

qishdr::RadianceMap flux_to_map(const std::vector<double>& flux, int width, int height) {
    qishdr::RadianceMap map(width, height);
    for (std::size_t i = 0; i < flux.size(); ++i)
        map.flux[i] = static_cast<float>(std::max(flux[i], 0.0));
    return map;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string scene, out, exposures, period;
    int bits = 1;
    double read_noise = 0.0, dark = 0.0;
    std::uint64_t seed = 0;
    int threads = 0;
};

int run_simulate(const SimulateArgs& args) {
    ManifestWriter manifest("simulate", args.seed);

    qishdr::ExposureSchedule schedule;
    schedule.groups = parse_exposures(args.exposures);
    if (!args.period.empty()) {
        schedule.frame_period_s = parse_seconds(args.period);
    } else {
        for (const auto& g : schedule.groups)
            schedule.frame_period_s = std::max(schedule.frame_period_s, g.exposure_s);
    }
    qishdr::SensorParams params;
    params.clip_level = bits_to_clip_level(args.bits);
    params.read_noise = args.read_noise;
    params.dark_current = args.dark;

    try {
        schedule.validate();
        params.validate();
    } catch (const qishdr::DomainError& e) {
        throw UsageError(e.what());
    }

    const qishdr::RadianceMap scene = qishdr::read_pfm(args.scene);
    const qishdr::FrameStack stack =
        qishdr::simulate_stack(scene, schedule, params, args.seed, args.threads);
    qishdr::write_stack(args.out, stack);

    for (std::size_t m = 0; m < stack.groups.size(); ++m) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& frame : stack.groups[m]) {
            for (auto code : frame.codes) sum += code;
            n += frame.codes.size();
        }
        std::printf("group %zu: exposure %.9g s, frames %d, mean code %.6f\n", m,
                    stack.schedule.groups[m].exposure_s, stack.schedule.groups[m].frames,
                    sum / static_cast<double>(n));
    }

    manifest.add_input(args.scene);
    manifest.add_output(args.out);
    auto& p = manifest.parameters();
    p["exposures"] = args.exposures;
    p["bits"] = args.bits;
    p["clip_level"] = params.clip_level;
    p["read_noise"] = params.read_noise;
    p["dark_current"] = params.dark_current;
    p["frame_period_s"] = schedule.frame_period_s;
    p["threads"] = args.threads;
    manifest.write(args.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// fuse
// ---------------------------------------------------------------------------

struct FuseArgs {
    std::string stack, out, method = "proposed", weights_out;
    int max_iter = 10;
    double tol = 1e-6;
    int threads = 0;
};

int run_fuse(const FuseArgs& args) {
    if (args.method != "proposed" && args.method != "equal" && args.method != "cis")
        throw UsageError("--method must be proposed, equal or cis");

    const qishdr::FrameStack stack = qishdr::read_stack(args.stack);
    ManifestWriter manifest("fuse", stack.seed);

    std::vector<double> flux;
    int iterations = 1;
    qishdr::WeightMap weights;

    if (args.method == "proposed") {
        qishdr::FusionConfig config;
        config.max_iterations = args.max_iter;
        config.convergence_tol = args.tol;
        config.threads = args.threads;
        qishdr::ReconstructionResult result = qishdr::iterative_reconstruct(stack, config);
        flux = std::move(result.flux);
        weights = std::move(result.weights);
        iterations = result.iterations;
    } else {
        std::vector<qishdr::LdrEstimate> ldrs;
        for (std::size_t m = 0; m < stack.groups.size(); ++m)
            ldrs.push_back(qishdr::ldr_estimate(stack.groups[m],
                                                stack.schedule.groups[m].exposure_s, stack.params));
        flux = args.method == "equal"
                   ? qishdr::fuse_equal_weight(ldrs)
                   : qishdr::fuse_cis_weights(ldrs, stack.params.clip_level);
    }

    qishdr::write_pfm(args.out, flux_to_map(flux, stack.width, stack.height));
    std::printf("fused %d exposure groups in %d iteration(s)\n", stack.schedule.num_groups(),
                iterations);

    if (!args.weights_out.empty()) {
        if (args.method != "proposed")
            throw UsageError("--weights-out is only available with --method proposed");
        const fs::path base(args.weights_out);
        const std::string stem = (base.parent_path() / base.stem()).string();
        const std::string ext = base.extension().empty() ? ".pfm" : base.extension().string();
        for (int m = 0; m < weights.num_exposures; ++m) {
            std::vector<double> layer(weights.pixel_count());
            for (std::size_t p = 0; p < layer.size(); ++p) layer[p] = weights.at(m, p);
            const fs::path path = stem + "_e" + std::to_string(m) + ext;
            qishdr::write_pfm(path, flux_to_map(layer, stack.width, stack.height));
            manifest.add_output(path);
        }
    }

    manifest.add_input(args.stack);
    manifest.add_output(args.out);
    auto& p = manifest.parameters();
    p["method"] = args.method;
    p["max_iter"] = args.max_iter;
    p["tol"] = args.tol;
    p["threads"] = args.threads;
    manifest.extra()["iterations"] = iterations;
    manifest.write(args.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// snr / dr shared inline configuration
// ---------------------------------------------------------------------------

struct CurveArgs {
    std::string exposures, grid, sensor = "qis";
    int bits = 1;
    double read_noise = 0.0, dark = 0.0;
    int full_well = 4000;
    bool fused = false;
    bool per_exposure = false;
};

qishdr::SnrCurve build_curve(const CurveArgs& args, std::vector<qishdr::SnrCurve>* per_exposure) {
    if (args.exposures.empty()) throw UsageError("--exposures is required");
    if (args.grid.empty()) throw UsageError("--grid is required");
    const std::vector<double> grid = parse_grid(args.grid);

    qishdr::ExposureSchedule schedule;
    try {
        schedule = qishdr::ExposureSchedule::from_groups(parse_exposures(args.exposures));
    } catch (const qishdr::DomainError& e) {
        throw UsageError(e.what());
    }

    if (args.sensor == "cis") {
        qishdr::CisParams cis{args.full_well, args.read_noise};
        if (per_exposure) {
            for (const auto& g : schedule.groups)
                per_exposure->push_back(qishdr::cis_snr_curve(cis, g.exposure_s, g.frames, grid));
        }
        return qishdr::cis_snr_curve(cis, schedule.groups.front().exposure_s,
                                     schedule.groups.front().frames, grid);
    }
    if (args.sensor != "qis") throw UsageError("--sensor must be qis or cis");

    qishdr::SensorParams params;
    params.clip_level = bits_to_clip_level(args.bits);
    params.read_noise = args.read_noise;
    params.dark_current = args.dark;
    if (per_exposure) {
        for (const auto& g : schedule.groups)
            per_exposure->push_back(qishdr::qis_snr_curve(params, g.exposure_s, g.frames, grid));
    }
    if (args.fused)
        return qishdr::fused_snr_curve(params, schedule, qishdr::WeightRule::Optimal, grid);
    return qishdr::qis_snr_curve(params, schedule.groups.front().exposure_s,
                                 schedule.groups.front().frames, grid);
}

struct SnrArgs {
    CurveArgs curve;
    std::string out;
};

int run_snr(const SnrArgs& args) {
    if (args.curve.fused && args.curve.per_exposure)
        throw UsageError("--fused and --per-exposure are mutually exclusive");
    ManifestWriter manifest("snr");

    if (args.curve.per_exposure) {
        std::vector<qishdr::SnrCurve> curves;
        build_curve(args.curve, &curves);
        if (curves.size() == 1) {
            qishdr::write_curve_csv(args.out, curves.front());
        } else {
            // Multi-column variant: abscissa,snr_db_1,...,snr_db_M.
            std::string text = "abscissa";
            for (std::size_t m = 0; m < curves.size(); ++m)
                text += ",snr_db_" + std::to_string(m + 1);
            text += "\n";
            char buf[40];
            for (std::size_t i = 0; i < curves.front().abscissa.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%.17g", curves.front().abscissa[i]);
                text += buf;
                for (const auto& c : curves) {
                    std::snprintf(buf, sizeof(buf), ",%.17g", c.snr_db[i]);
                    text += buf;
                }
                text += "\n";
            }
            std::ofstream out(args.out, std::ios::trunc | std::ios::binary);
            if (!out) throw qishdr::IoError("cannot open " + args.out + " for writing");
            out << text;
        }
    } else {
        const qishdr::SnrCurve curve = build_curve(args.curve, nullptr);
        qishdr::write_curve_csv(args.out, curve);
    }

    manifest.add_output(args.out);
    auto& p = manifest.parameters();
    p["sensor"] = args.curve.sensor;
    p["bits"] = args.curve.bits;
    p["read_noise"] = args.curve.read_noise;
    p["dark_current"] = args.curve.dark;
    p["exposures"] = args.curve.exposures;
    p["grid"] = args.curve.grid;
    p["fused"] = args.curve.fused;
    p["per_exposure"] = args.curve.per_exposure;
    if (args.curve.sensor == "cis") p["full_well"] = args.curve.full_well;
    manifest.write(args.out);
    return kExitOk;
}

struct DrArgs {
    CurveArgs curve;
    std::string curve_csv;
    double threshold = 0.0;
};

int run_dr(const DrArgs& args) {
    qishdr::SnrCurve curve;
    if (!args.curve_csv.empty()) {
        curve = qishdr::read_curve_csv(args.curve_csv);
    } else {
        curve = build_curve(args.curve, nullptr);
    }
    const qishdr::DynamicRangeReport report = qishdr::dynamic_range(curve, args.threshold);
    json out;
    out["valid"] = report.valid;
    out["floor"] = report.floor;
    out["ceiling"] = report.ceiling;
    out["range_db"] = report.range_db;
    out["threshold_db"] = report.threshold_db;
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// histfit / eval
// ---------------------------------------------------------------------------

struct HistfitArgs {
    std::string samples;
    double read_noise = 0.25;
    double dt = 1.0;
    double dark = 0.0;
};

int run_histfit(const HistfitArgs& args) {
    std::ifstream in(args.samples);
    if (!in) throw qishdr::IoError("cannot open " + args.samples);
    std::vector<double> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        try {
            samples.push_back(std::stod(line));
        } catch (const std::exception&) {
            if (line_no == 1) continue;  // tolerate a header row
            throw qishdr::FormatError("samples csv: bad number on line " + std::to_string(line_no));
        }
    }
    const double lambda = qishdr::histogram_fit(samples, args.read_noise, args.dark, args.dt);
    json out;
    out["lambda"] = lambda;
    out["lambda_dt"] = lambda * args.dt;
    out["samples"] = samples.size();
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

struct EvalArgs {
    std::string estimate, truth;
};

int run_eval(const EvalArgs& args) {
    const qishdr::RadianceMap est = qishdr::read_pfm(args.estimate);
    const qishdr::RadianceMap truth = qishdr::read_pfm(args.truth);
    if (est.width != truth.width || est.height != truth.height)
        throw qishdr::DomainError("eval: estimate and truth dimensions differ");
    std::vector<double> e(est.flux.begin(), est.flux.end());
    std::vector<double> t(truth.flux.begin(), truth.flux.end());
    json out;
    out["lmse"] = qishdr::lmse(e, t);
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"QIS HDR simulation, reconstruction and analysis"};
    app.set_version_flag("--version", QISHDR_VERSION);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Simulate a QIS frame stack from a PFM scene");
    cmd_sim->add_option("--scene", sim.scene, "Input radiance map (.pfm)")->required();
    cmd_sim->add_option("--out", sim.out, "Output stack file")->required();
    cmd_sim->add_option("--exposures", sim.exposures, "Schedule, e.g. 75us:10,375us:10")->required();
    cmd_sim->add_option("--bits", sim.bits, "ADC bit depth (clip level 2^b - 1)")->required();
    cmd_sim->add_option("--read-noise", sim.read_noise, "Read noise sigma (e- rms)");
    cmd_sim->add_option("--dark", sim.dark, "Dark current (e-/s)");
    cmd_sim->add_option("--seed", sim.seed, "RNG seed");
    cmd_sim->add_option("--period", sim.period, "Frame period (default: longest exposure)");
    cmd_sim->add_option("--threads", sim.threads, "Worker threads (0 = auto)");

    FuseArgs fuse;
    auto* cmd_fuse = app.add_subcommand("fuse", "Reconstruct an HDR flux map from a stack");
    cmd_fuse->add_option("--stack", fuse.stack, "Input stack file")->required();
    cmd_fuse->add_option("--out", fuse.out, "Output flux map (.pfm)")->required();
    cmd_fuse->add_option("--method", fuse.method, "proposed | equal | cis");
    cmd_fuse->add_option("--max-iter", fuse.max_iter, "Iteration cap (proposed)");
    cmd_fuse->add_option("--tol", fuse.tol, "Relative convergence tolerance (proposed)");
    cmd_fuse->add_option("--weights-out", fuse.weights_out, "Per-exposure weight map base path");
    cmd_fuse->add_option("--threads", fuse.threads, "Worker threads (0 = auto)");

    SnrArgs snr;
    auto* cmd_snr = app.add_subcommand("snr", "Write an SNR curve CSV");
    cmd_snr->add_option("--exposures", snr.curve.exposures, "Schedule, e.g. 1ms:1000")->required();
    cmd_snr->add_option("--grid", snr.curve.grid, "Flux grid lo:hi:n (log-spaced)")->required();
    cmd_snr->add_option("--out", snr.out, "Output CSV path")->required();
    cmd_snr->add_option("--bits", snr.curve.bits, "ADC bit depth");
    cmd_snr->add_option("--read-noise", snr.curve.read_noise, "Read noise sigma");
    cmd_snr->add_option("--dark", snr.curve.dark, "Dark current (e-/s)");
    cmd_snr->add_option("--sensor", snr.curve.sensor, "qis | cis");
    cmd_snr->add_option("--full-well", snr.curve.full_well, "CIS full well (electrons)");
    cmd_snr->add_flag("--fused", snr.curve.fused, "Fused multi-exposure curve");
    cmd_snr->add_flag("--per-exposure", snr.curve.per_exposure, "One column per exposure");

    DrArgs dr;
    auto* cmd_dr = app.add_subcommand("dr", "Print a dynamic-range report as JSON");
    cmd_dr->add_option("--curve", dr.curve_csv, "Existing curve CSV to analyze");
    cmd_dr->add_option("--threshold", dr.threshold, "SNR threshold in dB");
    cmd_dr->add_option("--exposures", dr.curve.exposures, "Inline config: schedule");
    cmd_dr->add_option("--grid", dr.curve.grid, "Inline config: flux grid lo:hi:n");
    cmd_dr->add_option("--bits", dr.curve.bits, "Inline config: ADC bit depth");
    cmd_dr->add_option("--read-noise", dr.curve.read_noise, "Inline config: read noise");
    cmd_dr->add_option("--dark", dr.curve.dark, "Inline config: dark current");
    cmd_dr->add_option("--sensor", dr.curve.sensor, "Inline config: qis | cis");
    cmd_dr->add_option("--full-well", dr.curve.full_well, "Inline config: CIS full well");
    cmd_dr->add_flag("--fused", dr.curve.fused, "Inline config: fused curve");

    HistfitArgs hist;
    auto* cmd_hist = app.add_subcommand("histfit", "Fit flux to a photon-counting histogram");
    cmd_hist->add_option("--samples", hist.samples, "CSV of analog readings, one per line")->required();
    cmd_hist->add_option("--read-noise", hist.read_noise, "Read noise sigma")->required();
    cmd_hist->add_option("--dt", hist.dt, "Integration time (seconds)")->required();
    cmd_hist->add_option("--dark", hist.dark, "Dark current (e-/s)");

    EvalArgs eval;
    auto* cmd_eval = app.add_subcommand("eval", "Print the log-scale MSE between two flux maps");
    cmd_eval->add_option("--estimate", eval.estimate, "Estimated flux map (.pfm)")->required();
    cmd_eval->add_option("--truth", eval.truth, "Ground-truth flux map (.pfm)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (cmd_sim->parsed()) return run_simulate(sim);
        if (cmd_fuse->parsed()) return run_fuse(fuse);
        if (cmd_snr->parsed()) return run_snr(snr);
        if (cmd_dr->parsed()) return run_dr(dr);
        if (cmd_hist->parsed()) return run_histfit(hist);
        if (cmd_eval->parsed()) return run_eval(eval);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const qishdr::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const qishdr::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const qishdr::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
