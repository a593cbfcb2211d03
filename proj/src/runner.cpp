#include "impedancemetry/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <filesystem>
#include <functional>
#include <future>
#include <mutex>
#include <numeric>
#include <sstream>

#include "impedancemetry/csv.hpp"
#include "impedancemetry/fitmath.hpp"
#include "impedancemetry/planner.hpp"
#include "impedancemetry/rng.hpp"
#include "impedancemetry/signal.hpp"
#include "impedancemetry/svgplot.hpp"
#include "impedancemetry/units.hpp"

namespace impedancemetry {

namespace {

// Runs f(0..n-1) on up to `jobs` threads; each index owns its output slot, so
// results are independent of scheduling.
void parallel_for(int jobs, int n, const std::function<void(int)>& f) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) break;
            f(i);
        }
    };
    std::vector<std::future<void>> pool;
    const int nThreads = std::min(jobs, n);
    pool.reserve(static_cast<std::size_t>(nThreads));
    for (int t = 0; t < nThreads; ++t) pool.push_back(std::async(std::launch::async, worker));
    for (auto& fut : pool) fut.get();
}

double wrap_pi(double x) {
    while (x > kPi) x -= 2.0 * kPi;
    while (x <= -kPi) x += 2.0 * kPi;
    return x;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double stddev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void maybe_write(const RunOptions& opts, const std::string& name, const std::string& body) {
    if (!opts.writeFiles) return;
    write_text_file((std::filesystem::path(opts.outDir) / name).string(), body);
}

std::uint64_t master_seed(const ExperimentConfig& cfg, const RunOptions& opts) {
    return opts.seed ? *opts.seed : cfg.seed;
}

}  // namespace

// ----- sweep -----------------------------------------------------------------

SweepResult run_sweep(const ExperimentConfig& cfg, double fmin, double fmax, int points,
                      const RunOptions& opts) {
    if (points < 1) throw std::invalid_argument("sweep: points must be >= 1");
    SweepResult result;
    CsvWriter summary({"cl_code", "cr_code", "cl_total_f", "cr_total_f", "fr_hz", "q",
                       "l_h", "r_series_ohm", "stable", "vin_v", "fr_peak_deviation"});
    SvgPlot frPlot("resonance tuning", "C_L code", "fr (MHz)");
    SvgPlot qPlot("quality-factor tuning", "C_R total (fF)", "Q");

    std::vector<double> frX, frY;
    for (unsigned cl = 0; cl < cfg.clBank.codeCount(); ++cl) {
        std::vector<double> qX, qY;
        for (unsigned cr = 0; cr < cfg.crBank.codeCount(); ++cr) {
            const ChainConfig chain = make_chain(cfg, cl, cr);
            const TankResponse res = resonance(chain.tank);
            SweepRow row;
            row.clCode = cl;
            row.crCode = cr;
            row.clTotal = chain.tank.clBank.total();
            row.crTotal = chain.tank.crBank.total();
            row.fr = res.fr;
            row.q = res.q;
            row.l = res.l;
            row.rSeries = res.rSeries;
            row.stable = res.stable;
            row.frPeakDeviation = res.frPeakDeviation;
            row.vin = res.stable
                          ? cfg.voutTarget / std::abs(chain_transfer(chain, res.fr).h)
                          : 0.0;
            result.summary.push_back(row);
            summary.add_row({std::to_string(cl), std::to_string(cr), format_number(row.clTotal),
                             format_number(row.crTotal), format_number(row.fr),
                             format_number(row.q), format_number(row.l),
                             format_number(row.rSeries), row.stable ? "1" : "0",
                             format_number(row.vin), format_number(row.frPeakDeviation)});
            qX.push_back(row.crTotal / kFemto);
            qY.push_back(row.q);

            // per-code frequency response
            const double lo = fmin > 0.0 ? fmin : res.fr * (1.0 - 5.0 / std::abs(res.q));
            const double hi = fmax > 0.0 ? fmax : res.fr * (1.0 + 5.0 / std::abs(res.q));
            CsvWriter codeCsv({"f_hz", "vout_v", "phase_rad", "tank_phase_rad"});
            const double vin = row.vin > 0.0 ? row.vin : 1e-3;
            for (int i = 0; i < points; ++i) {
                const double f =
                    points == 1 ? 0.5 * (lo + hi)
                                : lo + (hi - lo) * static_cast<double>(i) / (points - 1);
                const auto t = chain_transfer(chain, f);
                const double stagePhase = std::arg(chain_stage_gain(chain, f));
                codeCsv.add_row_numeric({f, std::abs(t.h) * vin, std::arg(t.h),
                                         wrap_pi(std::arg(t.h) - stagePhase)});
            }
            result.codeCsvs["sweep_cl" + std::to_string(cl) + "_cr" + std::to_string(cr) +
                            ".csv"] = codeCsv.str();
        }
        qPlot.add_series("cl" + std::to_string(cl), qX, qY);
        frX.push_back(static_cast<double>(cl));
        frY.push_back(result.summary[cl * cfg.crBank.codeCount()].fr / kMega);
    }
    frPlot.add_series("fr", frX, frY);
    result.summaryCsv = summary.str();

    maybe_write(opts, "sweep_summary.csv", result.summaryCsv);
    for (const auto& [name, body] : result.codeCsvs) maybe_write(opts, name, body);
    if (opts.writeFiles) {
        maybe_write(opts, "sweep_fr.svg", frPlot.render());
        maybe_write(opts, "sweep_q.svg", qPlot.render());
    }
    return result;
}

// ----- sensitivity calibration -------------------------------------------------

namespace {

struct AlphaProtocol {
    double tint1 = 1e-3;
    double f2 = 100.0;
    double duration = 8.0;
    double fs = 10e3;
    bool qualified = true;
};

// Per-half-period phase noise after boxcar averaging, including the flicker
// power passing the synchronous difference at f2.
double half_period_sigma(double sPhi, double flickerCorner, double tint1) {
    const double halfPeriod = 5.0 * tint1;
    const double f2 = 0.1 / tint1;
    const double whiteVar = sPhi * sPhi / (2.0 * halfPeriod);
    const double flickVar =
        flickerCorner > 0.0 ? sPhi * sPhi * flickerCorner * std::log(1.0 + 0.5 / (tint1 * f2)) * 2.0
                            : 0.0;
    return std::sqrt(whiteVar + flickVar);
}

// Integration/switching schedule for one probe capacitor at one Q setting.
// The linearization breaks when per-half phase noise reaches the pi/2
// singularity of tan(); probes that cannot be kept 5 sigma clear are skipped.
AlphaProtocol plan_alpha_protocol(double q, double cm, double cTot, double sPhi,
                                  double flickerCorner) {
    AlphaProtocol p;
    const double x = q * cm / cTot;
    const double margin = kPi / 2.0 - std::atan(x);
    if (sPhi <= 0.0) return p;
    const double ladder[] = {1e-3, 2e-3, 4e-3, 8e-3};
    p.qualified = false;
    for (double t : ladder) {
        if (half_period_sigma(sPhi, flickerCorner, t) * 5.0 <= margin) {
            p.tint1 = t;
            p.f2 = 0.1 / t;
            p.qualified = true;
            break;
        }
    }
    return p;
}

// Detuning-linearized phase-step measurement of one switched capacitor.
// Each switching period is reduced to tan(mean connected-half phase) minus
// tan(mean disconnected-half phase); the median over the periods rejects
// drift slower than the switching and tan() outliers. Returns alpha in rad/F
// (small-signal equivalent).
double measure_alpha_point(const ExperimentConfig& cfg, unsigned crCode, const std::string& momId,
                           double cm, const NoiseSpec& noise, const AlphaProtocol& proto) {
    SynthesisSetup setup;
    setup.chain = make_chain(cfg, cfg.clCode, crCode);
    setup.dut = make_dut_bank(cfg);
    setup.dut.selected = momId;
    setup.noise = noise;
    setup.duration = proto.duration;
    setup.fs = proto.fs;
    setup.exc.f2 = proto.f2;
    setup.exc.modKind = ModKind::dutSwitch;

    const BasebandTrace trace = synthesize_baseband(setup);
    const DemodResult stream = demod_single(trace, proto.tint1);
    const double stagePhase = std::arg(chain_stage_gain(setup.chain, trace.f1));

    const auto nPeriods = static_cast<std::size_t>(std::floor(proto.duration * proto.f2));
    std::vector<double> sumOn(nPeriods, 0.0), sumOff(nPeriods, 0.0);
    std::vector<int> cntOn(nPeriods, 0), cntOff(nPeriods, 0);
    for (std::size_t k = 0; k < stream.phase.size(); ++k) {
        const double t = stream.times[k];
        const auto period = static_cast<std::size_t>(std::floor(t * proto.f2));
        if (period >= nPeriods) break;
        const bool connected = (static_cast<long long>(std::floor(t * proto.f2 * 2.0)) % 2) == 0;
        const double tankPhase = stream.phase[k] - stagePhase;
        if (connected) {
            sumOn[period] += tankPhase;
            ++cntOn[period];
        } else {
            sumOff[period] += tankPhase;
            ++cntOff[period];
        }
    }
    std::vector<double> perPeriod;
    perPeriod.reserve(nPeriods);
    for (std::size_t p = 0; p < nPeriods; ++p) {
        if (cntOn[p] == 0 || cntOff[p] == 0) continue;
        perPeriod.push_back(std::tan(sumOff[p] / cntOff[p]) - std::tan(sumOn[p] / cntOn[p]));
    }
    return median_of(perPeriod) / cm;
}

}  // namespace

CalibrateResult run_calibrate(const ExperimentConfig& cfg, const RunOptions& opts,
                              bool withNoise) {
    if (cfg.sensitivityCrCodes.size() < 2) {
        throw FitQualityError("calibrate: need at least two C_R settings");
    }
    CalibrateResult result;
    const double cTot = cfg.cp + cfg.cpar;
    result.cTotConfigured = cTot;
    const NoiseSpec noiseBase = withNoise ? make_noise(cfg) : NoiseSpec{};
    const double sPhi = noiseBase.whitePhase;

    struct Setting {
        unsigned crCode;
        double qModel;
        double qMeasured;
        std::vector<std::pair<std::string, double>> probes;  // (id, value)
        std::vector<AlphaProtocol> protocols;
    };
    std::vector<Setting> settings;
    for (unsigned crCode : cfg.sensitivityCrCodes) {
        Setting s;
        s.crCode = crCode;
        const ChainConfig chain = make_chain(cfg, cfg.clCode, crCode);
        const TankResponse res = resonance(chain.tank);
        s.qModel = res.q;
        // measured q from a swept, de-embedded phase response
        const double window = 0.2 * res.fr / (2.0 * std::abs(res.q));
        std::vector<double> fs, ps;
        for (int i = 0; i < 41; ++i) {
            const double f = res.fr - window + 2.0 * window * i / 40.0;
            const auto t = chain_transfer(chain, f);
            fs.push_back(f);
            ps.push_back(wrap_pi(std::arg(t.h) - std::arg(chain_stage_gain(chain, f))));
        }
        s.qMeasured = extract_q(fs, ps, res.fr, std::abs(res.q)).q;
        // one tank, one phase-noise level: the configured density applies at
        // every Q setting (the input-referred noise improves with q)
        for (const auto& mom : cfg.momCaps) {
            AlphaProtocol proto = plan_alpha_protocol(std::abs(res.q), mom.value, cTot, sPhi,
                                                      noiseBase.flickerCorner);
            if (!proto.qualified) continue;
            s.probes.push_back({mom.name, mom.value});
            s.protocols.push_back(proto);
        }
        if (s.probes.empty()) {
            throw FitQualityError("calibrate: no probe capacitor usable at cr code " +
                                  std::to_string(crCode));
        }
        settings.push_back(std::move(s));
    }

    const std::uint64_t master = master_seed(cfg, opts);

    auto run_pass = [&](std::uint64_t seedBase,
                        bool noisy) -> std::vector<std::pair<double, double>> {
        std::vector<std::pair<double, double>> points;
        for (std::size_t si = 0; si < settings.size(); ++si) {
            const auto& s = settings[si];
            std::vector<double> cms, xs, ws;
            for (std::size_t pi = 0; pi < s.probes.size(); ++pi) {
                NoiseSpec noise = noiseBase;
                if (!noisy) noise.whitePhase = 0.0;
                noise.seed = derive_seed(seedBase, si * 16 + pi);
                const double alpha = measure_alpha_point(cfg, s.crCode, s.probes[pi].first,
                                                         s.probes[pi].second, noise,
                                                         s.protocols[pi]);
                cms.push_back(s.probes[pi].second);
                xs.push_back(alpha * s.probes[pi].second);
                const double x = std::abs(s.qModel) * s.probes[pi].second / cTot;
                const double sigma = noisy ? (1.0 + x * x) : 1.0;
                ws.push_back(1.0 / (sigma * sigma));
            }
            const double alphaQ = zero_intercept_fit(cms, xs, ws).slope;
            points.push_back({s.qMeasured, alphaQ});
        }
        return points;
    };

    // noiseless (or single-seed) pass defines the reported fit
    const auto basePoints = run_pass(derive_seed(master, 0), withNoise);
    result.fit = fit_sensitivity(basePoints);
    for (std::size_t i = 0; i < settings.size(); ++i) {
        AlphaPoint p;
        p.crCode = settings[i].crCode;
        p.qMeasured = settings[i].qMeasured;
        p.alpha = basePoints[i].second;
        p.probesUsed = static_cast<int>(settings[i].probes.size());
        result.points.push_back(p);
    }
    result.recoveryError = std::abs(result.fit.cTotRecovered / cTot - 1.0);

    if (withNoise && cfg.monteCarloSeeds > 1) {
        result.mcRecovered.assign(static_cast<std::size_t>(cfg.monteCarloSeeds), 0.0);
        parallel_for(opts.jobs, cfg.monteCarloSeeds, [&](int k) {
            const auto pts = run_pass(derive_seed(master, 100 + static_cast<std::uint64_t>(k)),
                                      true);
            result.mcRecovered[static_cast<std::size_t>(k)] = fit_sensitivity(pts).cTotRecovered;
        });
        std::vector<double> errs;
        for (double rec : result.mcRecovered) errs.push_back(std::abs(rec / cTot - 1.0));
        result.mcMedianError = median_of(errs);
    }

    CsvWriter alphaCsv({"cr_code", "q", "alpha_rad_per_f", "alpha_deg_per_ff", "probes_used"});
    for (const auto& p : result.points) {
        alphaCsv.add_row({std::to_string(p.crCode), format_number(p.qMeasured),
                          format_number(p.alpha), format_number(rad_to_deg(p.alpha) * kFemto),
                          std::to_string(p.probesUsed)});
    }
    result.alphaCsv = alphaCsv.str();
    CsvWriter mcCsv({"seed_index", "c_tot_recovered_f", "relative_error"});
    for (std::size_t k = 0; k < result.mcRecovered.size(); ++k) {
        mcCsv.add_row_numeric({static_cast<double>(k), result.mcRecovered[k],
                               std::abs(result.mcRecovered[k] / cTot - 1.0)});
    }
    result.mcCsv = mcCsv.str();

    maybe_write(opts, "sensitivity_alpha.csv", result.alphaCsv);
    maybe_write(opts, "sensitivity_montecarlo.csv", result.mcCsv);
    if (opts.writeFiles) {
        SvgPlot plot("capacitance sensitivity vs Q", "Q", "alpha (deg/fF)");
        std::vector<double> qs, as;
        for (const auto& p : result.points) {
            qs.push_back(p.qMeasured);
            as.push_back(rad_to_deg(p.alpha) * kFemto);
        }
        plot.add_series("alpha", qs, as);
        maybe_write(opts, "sensitivity_alpha.svg", plot.render());
    }
    return result;
}

// ----- capacitance resolution --------------------------------------------------

ResolutionResult run_resolution(const ExperimentConfig& cfg, const RunOptions& opts,
                                bool flickerOn) {
    if (cfg.momCaps.empty()) throw FitQualityError("resolution: no probe capacitor configured");
    ResolutionResult result;
    result.flicker = flickerOn;
    const double cm = cfg.momCaps.front().value;
    const std::string momId = cfg.momCaps.front().name;
    const double f2 = cfg.f2;
    const NoiseSpec noiseBase = make_noise(cfg, flickerOn);
    const std::uint64_t master = master_seed(cfg, opts);

    const ChainConfig chainOp = make_chain(cfg, cfg.clCode, cfg.crCode);
    const TankResponse resOp = resonance(chainOp.tank);
    const double alpha = std::abs(resOp.q) / chainOp.tank.totalCap();

    auto makeSetup = [&](double fs, double duration, bool switching,
                         std::uint64_t seed) {
        SynthesisSetup s;
        s.chain = chainOp;
        s.dut = make_dut_bank(cfg);
        s.noise = noiseBase;
        s.noise.seed = seed;
        s.duration = duration;
        s.fs = fs;
        if (switching) {
            s.dut.selected = momId;
            s.exc.f2 = f2;
            s.exc.modKind = ModKind::dutSwitch;
        }
        return s;
    };

    // method I grid: one fast-sampled switching trace, demodulated per tint
    const std::vector<double> tintGrid = {100e-9, 200e-9, 500e-9, 1e-6, 2e-6,
                                          5e-6,   10e-6,  20e-6,  50e-6, 100e-6};
    // method IIa grid on the 100 us phase stream
    const std::vector<double> tint2Grid = {1e-3, 2e-3, 5e-3, 1e-2, 2e-2,
                                           5e-2, 0.1,  0.2,  0.5,  1.0};
    const std::vector<double> longGrid = {1e-2, 1e-1, 1.0};
    constexpr int kAnchorSeeds = 15;

    std::vector<double> anchorSnrs(kAnchorSeeds, 0.0);
    std::mutex resultLock;
    std::vector<std::function<void()>> tasks;

    tasks.push_back([&]() {
        const auto setup = makeSetup(20e6, 0.105, true, derive_seed(master, 1));
        const BasebandTrace trace = synthesize_baseband(setup);
        std::vector<ResolutionPoint> pts;
        for (double tint : tintGrid) {
            const DemodResult d = demod_single(trace, tint);
            const SnrReport rep =
                snr_from_square_wave(d.phase, d.rate(), f2, tint, cm, cfg.snrCeiling);
            pts.push_back({tint, rep.snr, rep.cmEquivalent});
        }
        std::lock_guard<std::mutex> g(resultLock);
        result.methodI = std::move(pts);
    });

    for (int k = 0; k < kAnchorSeeds; ++k) {
        tasks.push_back([&, k]() {
            const auto setup =
                makeSetup(400e3, 0.0905, true, derive_seed(master, 10 + static_cast<std::uint64_t>(k)));
            const BasebandTrace trace = synthesize_baseband(setup);
            const DemodResult d = demod_single(trace, 55e-6);
            const SnrReport rep =
                snr_from_square_wave(d.phase, d.rate(), f2, 55e-6, cm, cfg.snrCeiling);
            anchorSnrs[static_cast<std::size_t>(k)] = rep.snr;
        });
    }

    tasks.push_back([&]() {
        const auto setup = makeSetup(200e3, 16.0, true, derive_seed(master, 2));
        const BasebandTrace trace = synthesize_baseband(setup);
        const DemodResult stream = demod_single(trace, 100e-6);
        std::vector<IIaPoint> pts;
        for (double t2 : tint2Grid) {
            const DemodResult d2 = demod_double_amplitude(stream, f2, t2);
            if (d2.amplitude.size() < 8) continue;
            IIaPoint p;
            p.tint2 = t2;
            double m = 0.0;
            for (double a : d2.amplitude) m += a;
            m /= static_cast<double>(d2.amplitude.size());
            p.mean = m;
            p.std = stddev_of(d2.amplitude);
            p.cmEquivalent = cm * p.std / p.mean;
            pts.push_back(p);
        }
        std::lock_guard<std::mutex> g(resultLock);
        result.methodIIa = std::move(pts);
    });

    tasks.push_back([&]() {
        const auto setup = makeSetup(200e3, 16.0, false, derive_seed(master, 3));
        const BasebandTrace trace = synthesize_baseband(setup);
        std::vector<LongHorizonPoint> pts;
        const double scEff = noiseBase.whitePhase / alpha;
        for (double tint : longGrid) {
            const DemodResult d = demod_single(trace, tint);
            if (d.phase.size() < 8) continue;
            LongHorizonPoint p;
            p.tint = tint;
            p.cNoise = stddev_of(d.phase) / alpha;
            p.whitePred = scEff / std::sqrt(2.0 * tint);
            pts.push_back(p);
        }
        std::lock_guard<std::mutex> g(resultLock);
        result.longHorizon = std::move(pts);
    });

    parallel_for(opts.jobs, static_cast<int>(tasks.size()),
                 [&](int i) { tasks[static_cast<std::size_t>(i)](); });

    result.anchorSnr = median_of(anchorSnrs);
    {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : result.methodI) pts.push_back({p.tint, p.cmEquivalent});
        result.fitI = fit_resolution(pts);
    }
    {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : result.methodIIa) pts.push_back({p.tint2, p.cmEquivalent});
        if (pts.size() >= 4) result.fitIIa = fit_resolution(pts);
    }

    CsvWriter m1({"tint_s", "snr", "cm_at_snr1_f"});
    for (const auto& p : result.methodI) m1.add_row_numeric({p.tint, p.snr, p.cmEquivalent});
    result.methodICsv = m1.str();
    CsvWriter m2({"tint2_s", "mean_rad", "std_rad", "cm_equivalent_f"});
    for (const auto& p : result.methodIIa) {
        m2.add_row_numeric({p.tint2, p.mean, p.std, p.cmEquivalent});
    }
    result.methodIIaCsv = m2.str();
    CsvWriter lh({"tint_s", "c_noise_f", "white_prediction_f"});
    for (const auto& p : result.longHorizon) {
        lh.add_row_numeric({p.tint, p.cNoise, p.whitePred});
    }
    result.longHorizonCsv = lh.str();
    CsvWriter fits({"method", "exponent", "a_f_sqrt_s", "sc_f_per_rthz", "non_white_flag",
                    "anchor_snr_2ff_55us"});
    fits.add_row({"I", format_number(result.fitI.exponent), format_number(result.fitI.a),
                  format_number(result.fitI.sc), result.fitI.nonWhiteFlag ? "1" : "0",
                  format_number(result.anchorSnr)});
    fits.add_row({"IIa", format_number(result.fitIIa.exponent), format_number(result.fitIIa.a),
                  format_number(result.fitIIa.sc), result.fitIIa.nonWhiteFlag ? "1" : "0", ""});
    result.fitCsv = fits.str();

    const std::string suffix = flickerOn ? "_flicker" : "_white";
    maybe_write(opts, "resolution_method1" + suffix + ".csv", result.methodICsv);
    maybe_write(opts, "resolution_method2a" + suffix + ".csv", result.methodIIaCsv);
    maybe_write(opts, "resolution_long_horizon" + suffix + ".csv", result.longHorizonCsv);
    maybe_write(opts, "resolution_fits" + suffix + ".csv", result.fitCsv);
    if (opts.writeFiles) {
        SvgPlot plot("capacitance resolution", "integration time (s)", "C at SNR=1 (F)", true,
                     true);
        std::vector<double> xs, ys;
        for (const auto& p : result.methodI) {
            xs.push_back(p.tint);
            ys.push_back(p.cmEquivalent);
        }
        plot.add_series("method I", xs, ys);
        xs.clear();
        ys.clear();
        for (const auto& p : result.methodIIa) {
            xs.push_back(p.tint2);
            ys.push_back(p.cmEquivalent);
        }
        plot.add_series("method IIa", xs, ys);
        maybe_write(opts, "resolution" + suffix + ".svg", plot.render());
    }
    return result;
}

// ----- quantum-capacitance spectroscopy ----------------------------------------

namespace {

struct PeakPair {
    double center = 0.0;
    double strength = 0.0;
    double separation = 0.0;
};

double refine_extremum(const std::vector<double>& x, const std::vector<double>& y, int i) {
    if (i <= 0 || i + 1 >= static_cast<int>(x.size())) return x[static_cast<std::size_t>(i)];
    const double y0 = y[static_cast<std::size_t>(i - 1)], y1 = y[static_cast<std::size_t>(i)],
                 y2 = y[static_cast<std::size_t>(i + 1)];
    const double denom = y0 - 2.0 * y1 + y2;
    if (denom == 0.0) return x[static_cast<std::size_t>(i)];
    const double delta = 0.5 * (y0 - y2) / denom;
    const double h = x[2] - x[1];
    return x[static_cast<std::size_t>(i)] + delta * h;
}

// Peak-dip pairs of a derivative trace: local maximum followed by the next
// local minimum; the midpoint is the feature center (first-order immune to a
// linear background).
std::vector<PeakPair> find_peak_pairs(const std::vector<double>& vgs,
                                      const std::vector<double>& dcdv, std::size_t want) {
    std::vector<int> maxima, minima;
    for (int i = 1; i + 1 < static_cast<int>(dcdv.size()); ++i) {
        const double a = dcdv[static_cast<std::size_t>(i - 1)];
        const double b = dcdv[static_cast<std::size_t>(i)];
        const double c = dcdv[static_cast<std::size_t>(i + 1)];
        if (b > a && b >= c) maxima.push_back(i);
        if (b < a && b <= c) minima.push_back(i);
    }
    std::vector<PeakPair> pairs;
    for (int mi : maxima) {
        int best = -1;
        for (int ni : minima) {
            if (ni > mi) {
                best = ni;
                break;
            }
        }
        if (best < 0) continue;
        PeakPair p;
        const double vMax = refine_extremum(vgs, dcdv, mi);
        const double vMin = refine_extremum(vgs, dcdv, best);
        p.center = 0.5 * (vMax + vMin);
        p.separation = vMin - vMax;
        p.strength = dcdv[static_cast<std::size_t>(mi)] - dcdv[static_cast<std::size_t>(best)];
        pairs.push_back(p);
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const PeakPair& a, const PeakPair& b) { return a.strength > b.strength; });
    if (pairs.size() > want) pairs.resize(want);
    std::sort(pairs.begin(), pairs.end(),
              [](const PeakPair& a, const PeakPair& b) { return a.center < b.center; });
    return pairs;
}

}  // namespace

QcapResult run_qcap(const ExperimentConfig& cfg, const RunOptions& opts, double deltaV,
                    bool withNoise) {
    if (cfg.fets.empty()) throw FitQualityError("qcap: no FET device configured");
    if (!(deltaV > 0.0)) throw std::invalid_argument("qcap: deltaV must be > 0");
    const FetCvModel& fet = cfg.fets.front();
    QcapResult result;
    result.deltaV = deltaV;

    for (double vbg = 2.0; vbg <= 6.0 + 1e-9; vbg += 0.5) result.vbgValues.push_back(vbg);
    for (double v = -0.15; v <= 0.55 + 1e-9; v += 0.0025) result.vgsValues.push_back(v);

    const ChainConfig chain = make_chain(cfg, cfg.clCode, cfg.crCode);
    const TankResponse resOp = resonance(chain.tank);
    const double alpha = std::abs(resOp.q) / chain.tank.totalCap();
    const NoiseSpec noiseBase = withNoise ? make_noise(cfg) : NoiseSpec{};
    const std::uint64_t master = master_seed(cfg, opts);
    const double fs = 40e3;
    const double duration = 12e-3;

    result.map.assign(result.vbgValues.size(),
                      std::vector<double>(result.vgsValues.size(), 0.0));
    const int total = static_cast<int>(result.vbgValues.size() * result.vgsValues.size());
    parallel_for(opts.jobs, total, [&](int idx) {
        const std::size_t i = static_cast<std::size_t>(idx) / result.vgsValues.size();
        const std::size_t j = static_cast<std::size_t>(idx) % result.vgsValues.size();
        DutBank bank = make_dut_bank(cfg);
        // vgs = vcm - vbias: steer the bias source to the requested bias point
        bank.vbias = bank.vcm - result.vgsValues[j];
        NoiseSpec noise = noiseBase;
        noise.seed = derive_seed(master, static_cast<std::uint64_t>(idx));
        result.map[i][j] = measure_dcdv_point(chain, bank, fet.name, noise,
                                              result.vbgValues[i], cfg.f2, deltaV, duration, fs,
                                              alpha);
    });

    // track features across back-gate voltage
    const std::size_t nPeaks = fet.peaks.size();
    std::vector<std::vector<PeakPair>> rows;
    std::vector<double> separations;
    for (std::size_t i = 0; i < result.vbgValues.size(); ++i) {
        auto pairs = find_peak_pairs(result.vgsValues, result.map[i], nPeaks);
        for (const auto& p : pairs) separations.push_back(p.separation);
        rows.push_back(std::move(pairs));
    }
    result.smearedFlag = deltaV > 0.75 * median_of(separations);

    for (std::size_t k = 0; k < nPeaks; ++k) {
        QcapPeakTrack track;
        track.peakIndex = static_cast<int>(k);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != nPeaks) continue;
            track.vbg.push_back(result.vbgValues[i]);
            track.center.push_back(rows[i][k].center);
        }
        if (track.vbg.size() >= 3) {
            const LineFit fit = linear_fit(track.vbg, track.center);
            track.beta = fit.slope != 0.0 ? -1.0 / fit.slope : 0.0;
            track.r2 = fit.r2;
        }
        result.tracks.push_back(std::move(track));
    }

    CsvWriter mapCsv({"vbg_v", "vgs_v", "dcgg_dv_f_per_v"});
    for (std::size_t i = 0; i < result.vbgValues.size(); ++i) {
        for (std::size_t j = 0; j < result.vgsValues.size(); ++j) {
            mapCsv.add_row_numeric({result.vbgValues[i], result.vgsValues[j], result.map[i][j]});
        }
    }
    result.mapCsv = mapCsv.str();

    CsvWriter trackCsv({"peak_index", "beta", "r2", "n_points"});
    for (const auto& t : result.tracks) {
        trackCsv.add_row({std::to_string(t.peakIndex), format_number(t.beta),
                          format_number(t.r2), std::to_string(t.vbg.size())});
    }
    result.trackCsv = trackCsv.str();

    CsvWriter cvCsv({"vbg_v", "vgs_v", "cgg_relative_f"});
    for (std::size_t i = 0; i < result.vbgValues.size(); ++i) {
        double acc = 0.0;
        cvCsv.add_row_numeric({result.vbgValues[i], result.vgsValues[0], acc});
        for (std::size_t j = 1; j < result.vgsValues.size(); ++j) {
            const double h = result.vgsValues[j] - result.vgsValues[j - 1];
            acc += 0.5 * (result.map[i][j] + result.map[i][j - 1]) * h;
            cvCsv.add_row_numeric({result.vbgValues[i], result.vgsValues[j], acc});
        }
    }
    result.cvCsv = cvCsv.str();

    maybe_write(opts, "qcap_map.csv", result.mapCsv);
    maybe_write(opts, "qcap_peak_tracks.csv", result.trackCsv);
    maybe_write(opts, "qcap_cv.csv", result.cvCsv);
    if (opts.writeFiles) {
        SvgPlot plot("dCgg/dVgs vs Vgs", "Vgs (V)", "dC/dV (aF/mV)");
        for (std::size_t i = 0; i < result.vbgValues.size(); i += 2) {
            std::vector<double> ys;
            for (double v : result.map[i]) ys.push_back(v * 1e-3 / kAtto);
            plot.add_series("vbg=" + format_number(result.vbgValues[i]), result.vgsValues, ys);
        }
        maybe_write(opts, "qcap_map.svg", plot.render());
    }
    return result;
}

// ----- planning -----------------------------------------------------------------

PlanResult run_plan(const ExperimentConfig& cfg, const RunOptions& opts, int n, int m) {
    (void)cfg;
    PlanResult result;
    result.n = n;
    result.m = m;

    const auto refl = footprint_report(reflectometry_budget(), n, m);
    const auto pass = footprint_report(impedancemetry_passive_budget(), n, m);
    const auto act = footprint_report(impedancemetry_active_budget(), n, m);
    result.reflectometryTotal = refl.total;
    result.passiveTotal = pass.total;
    result.activeTotal = act.total;
    result.reflectometryDominant = refl.dominant;
    result.passiveDominant = pass.dominant;
    result.activeDominant = act.dominant;
    result.powerPerQubit = power_per_qubit(85e-6, n);

    const auto density = inductance_density_comparison();
    result.densityActiveOverPassive = density.activeOverPassive;
    result.densityActiveOverSuperconducting = density.activeOverSuperconducting;
    result.densityNote = density.note;

    result.hardBoundChannels = max_channels(1e9, 1e-6);
    result.exampleSpacingChannels = static_cast<int>(1e9 / 5e6);

    CsvWriter fp({"scheme", "element", "unit_footprint_mm2", "count", "total_mm2"});
    auto addRows = [&](const std::string& scheme, const FootprintReport& rep) {
        for (const auto& row : rep.rows) {
            fp.add_row({scheme, row.name, format_number(row.unitFootprint),
                        format_number(row.count), format_number(row.total)});
        }
        fp.add_row({scheme, "TOTAL", "", "", format_number(rep.total)});
    };
    addRows("reflectometry", refl);
    addRows("impedancemetry_passive", pass);
    addRows("impedancemetry_active", act);
    result.footprintCsv = fp.str();

    CsvWriter alloc({"preset", "bandwidth_hz", "readout_time_s", "channels", "spacing_hz"});
    {
        const auto hard = allocate(1e9, 1e-6, result.hardBoundChannels);
        alloc.add_row({"hard_bound", format_number(1e9), format_number(1e-6),
                       std::to_string(hard.n), format_number(hard.spacing)});
        const auto ex = allocate(1e9, 1e-6, result.exampleSpacingChannels);
        alloc.add_row({"example_5mhz_resolution", format_number(1e9), format_number(1e-6),
                       std::to_string(ex.n), format_number(ex.spacing)});
        const auto sm = allocate(1e9, 1e-6, 10);
        alloc.add_row({"nxn_100_reading", format_number(1e9), format_number(1e-6),
                       std::to_string(sm.n), format_number(sm.spacing)});
    }
    result.allocationCsv = alloc.str();

    std::ostringstream table;
    table << "footprint scaling (n=" << n << ", m=" << m << ")\n";
    auto addTable = [&](const std::string& scheme, const FootprintReport& rep) {
        table << "  " << scheme << ": total " << format_number(rep.total)
              << " mm^2, dominated by " << rep.dominant << "\n";
    };
    addTable("reflectometry", refl);
    addTable("impedancemetry (passive L)", pass);
    addTable("impedancemetry (active L)", act);
    table << "power per qubit (85 uW resonator, n=" << n
          << "): " << format_number(result.powerPerQubit * 1e6) << " uW\n";
    table << "inductance density ratios: active/passive = "
          << format_number(result.densityActiveOverPassive)
          << ", active/superconducting = "
          << format_number(result.densityActiveOverSuperconducting) << "\n";
    table << "note: " << result.densityNote << "\n";
    result.textTable = table.str();

    maybe_write(opts, "plan_footprint.csv", result.footprintCsv);
    maybe_write(opts, "plan_allocation.csv", result.allocationCsv);
    maybe_write(opts, "plan_summary.txt", result.textTable);
    return result;
}

std::string trace_to_csv(const BasebandTrace& trace, std::size_t maxRows) {
    CsvWriter csv({"time_s", "i_v", "q_v", "amplitude_v", "phase_rad"});
    const std::size_t n =
        maxRows > 0 ? std::min(maxRows, trace.iq.size()) : trace.iq.size();
    for (std::size_t k = 0; k < n; ++k) {
        csv.add_row_numeric({static_cast<double>(k) / trace.fs, trace.iq[k].real(),
                             trace.iq[k].imag(), std::abs(trace.iq[k]), trace.phase[k]});
    }
    return csv.str();
}

}  // namespace impedancemetry
