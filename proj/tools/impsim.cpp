#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "impedancemetry/config.hpp"
#include "impedancemetry/csv.hpp"
#include "impedancemetry/runner.hpp"

namespace {

using namespace impedancemetry;

struct CommonArgs {
    std::string configPath;
    std::string outDir;
    int jobs = 1;
    std::uint64_t seed = 0;
    bool haveSeed = false;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.configPath, "experiment configuration file");
    cmd->add_option("--out", args.outDir, "output directory (default: out)");
    cmd->add_option("--jobs", args.jobs, "worker threads")->check(CLI::Range(1, 256));
    cmd->add_option("--seed", args.seed, "master seed override")
        ->each([&](const std::string&) { args.haveSeed = true; });
    cmd->add_option("--format", args.format, "csv or table")
        ->check(CLI::IsMember({"csv", "table"}));
}

ExperimentConfig load_config(const CommonArgs& args) {
    if (args.configPath.empty()) return default_config();
    return parse_config_file(args.configPath);
}

RunOptions make_options(const CommonArgs& args) {
    RunOptions opts;
    if (!args.outDir.empty()) {
        opts.outDir = args.outDir;
    } else if (const char* env = std::getenv("IMPEDANCEMETRY_OUT")) {
        opts.outDir = env;
    }
    opts.jobs = args.jobs;
    if (args.haveSeed) opts.seed = args.seed;
    opts.format = args.format;
    return opts;
}

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitFitQuality = 4;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"impedancemetry readout simulator"};
    app.require_subcommand(1);

    CommonArgs args;

    auto* sweep = app.add_subcommand("sweep", "frequency response per capacitor-bank setting");
    double fmin = 0.0, fmax = 0.0;
    int points = 201;
    sweep->add_option("--fmin", fmin, "sweep start (Hz); 0 = auto around resonance");
    sweep->add_option("--fmax", fmax, "sweep end (Hz); 0 = auto around resonance");
    sweep->add_option("--points", points, "samples per sweep")->check(CLI::Range(1, 1000000));
    add_common(sweep, args);

    auto* calibrate =
        app.add_subcommand("calibrate", "switched-capacitor sensitivity calibration");
    bool calNoiseless = false;
    calibrate->add_flag("--noiseless", calNoiseless, "disable noise injection");
    add_common(calibrate, args);

    auto* resolution = app.add_subcommand("resolution", "capacitance resolution vs integration time");
    bool resNoFlicker = false;
    bool dumpTrace = false;
    resolution->add_flag("--no-flicker", resNoFlicker, "white noise only");
    resolution->add_flag("--dump-trace", dumpTrace, "export a debug baseband trace CSV");
    add_common(resolution, args);

    auto* qcap = app.add_subcommand("qcap", "quantum-capacitance derivative spectroscopy");
    double deltaV = 3.1e-3;
    bool qcapNoise = false;
    qcap->add_option("--delta-v", deltaV, "vgs excitation amplitude (V)");
    qcap->add_flag("--with-noise", qcapNoise, "inject the configured noise");
    add_common(qcap, args);

    auto* plan = app.add_subcommand("plan", "multiplexing and footprint scaling tables");
    int planN = 10, planM = 1;
    plan->add_option("--n", planN, "resonators per tile");
    plan->add_option("--m", planM, "tile count");
    add_common(plan, args);

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig cfg = load_config(args);
        const RunOptions opts = make_options(args);

        if (sweep->parsed()) {
            const auto res = run_sweep(cfg, fmin, fmax, points, opts);
            std::cout << "sweep: " << res.summary.size() << " settings -> " << opts.outDir
                      << "\n";
        } else if (calibrate->parsed()) {
            const auto res = run_calibrate(cfg, opts, !calNoiseless);
            std::cout << "calibrate: C_tot recovered "
                      << format_number(res.fit.cTotRecovered * 1e15) << " fF (configured "
                      << format_number(res.cTotConfigured * 1e15) << " fF, error "
                      << format_number(res.recoveryError * 100.0) << "%)\n";
            if (!res.mcRecovered.empty()) {
                std::cout << "calibrate: median Monte-Carlo error "
                          << format_number(res.mcMedianError * 100.0) << "% over "
                          << res.mcRecovered.size() << " seeds\n";
            }
        } else if (resolution->parsed()) {
            const auto res = run_resolution(cfg, opts, !resNoFlicker);
            std::cout << "resolution: method I exponent " << format_number(res.fitI.exponent)
                      << (res.fitI.nonWhiteFlag ? " (non-white regime flagged)" : "")
                      << ", anchor SNR " << format_number(res.anchorSnr) << "\n";
            if (!res.methodIIa.empty()) {
                std::cout << "resolution: method IIa floor at "
                          << format_number(res.methodIIa.back().tint2) << " s is "
                          << format_number(res.methodIIa.back().cmEquivalent * 1e18) << " aF\n";
            }
            if (dumpTrace) {
                SynthesisSetup setup;
                setup.chain = make_chain(cfg, cfg.clCode, cfg.crCode);
                setup.dut = make_dut_bank(cfg);
                setup.noise = make_noise(cfg, !resNoFlicker);
                setup.duration = 0.02;
                setup.fs = 200e3;
                write_text_file(opts.outDir + "/debug_trace.csv",
                                trace_to_csv(synthesize_baseband(setup)));
            }
        } else if (qcap->parsed()) {
            const auto res = run_qcap(cfg, opts, deltaV, qcapNoise);
            std::cout << "qcap: " << res.tracks.size() << " tracked features";
            for (const auto& t : res.tracks) std::cout << " beta=" << format_number(t.beta);
            std::cout << (res.smearedFlag ? " [smeared excitation]" : "") << "\n";
        } else if (plan->parsed()) {
            const auto res = run_plan(cfg, opts, planN, planM);
            if (opts.format == "table") {
                std::cout << res.textTable;
            } else {
                std::cout << "plan: totals " << format_number(res.reflectometryTotal) << " / "
                          << format_number(res.passiveTotal) << " / "
                          << format_number(res.activeTotal) << " mm^2 -> " << opts.outDir
                          << "\n";
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FitQualityError& e) {
        std::cerr << "fit quality error: " << e.what() << "\n";
        return kExitFitQuality;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
