#include <doctest.h>

#include <cmath>
#include <complex>

#include "impedancemetry/analysis.hpp"
#include "impedancemetry/config.hpp"
#include "impedancemetry/fitmath.hpp"
#include "impedancemetry/rng.hpp"
#include "impedancemetry/signal.hpp"
#include "impedancemetry/units.hpp"

using namespace impedancemetry;

namespace {

SynthesisSetup base_setup(const ExperimentConfig& cfg, double duration, double fs) {
    SynthesisSetup s;
    s.chain = make_chain(cfg, cfg.clCode, cfg.crCode);
    s.dut = make_dut_bank(cfg);
    s.duration = duration;
    s.fs = fs;
    return s;
}

DemodResult synthetic_phase_stream(const std::vector<double>& phase, double rate) {
    DemodResult d;
    d.tint = 1.0 / rate;
    d.method = DemodMethod::I;
    d.phase = phase;
    d.amplitude.assign(phase.size(), 1.0);
    d.times.resize(phase.size());
    for (std::size_t i = 0; i < phase.size(); ++i) d.times[i] = (i + 0.5) / rate;
    return d;
}

}  // namespace

TEST_CASE("noise-off static trace equals the chain response") {
    const auto cfg = default_config();
    auto setup = base_setup(cfg, 1e-3, 100e3);
    const auto trace = synthesize_baseband(setup);
    const auto h = chain_transfer(setup.chain, trace.f1).h;
    for (std::size_t i = 0; i < trace.iq.size(); i += 17) {
        CHECK(std::abs(trace.iq[i] - h * trace.vin) < 1e-12 * std::abs(h * trace.vin));
        CHECK(trace.phase[i] == doctest::Approx(std::arg(h)));
    }
    // auto amplitude hits the configured output target
    CHECK(std::abs(trace.iq[0]) == doctest::Approx(1.8e-3).epsilon(1e-9));
}

TEST_CASE("switched DUT produces the expected phase square wave") {
    auto cfg = default_config();
    auto setup = base_setup(cfg, 20e-3, 100e3);
    setup.dut.selected = "mom0";
    setup.exc.modKind = ModKind::dutSwitch;
    setup.exc.f2 = 1e3;
    const auto trace = synthesize_baseband(setup);

    double lo = 1e9, hi = -1e9;
    for (double p : trace.phase) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    const auto tank = setup.chain.tank;
    const auto res = resonance(tank);
    const double x = std::abs(res.q) * 2e-15 / tank.totalCap();
    // full-impedance oracle: the step is arctangent-compressed at 2 fF
    CHECK(hi - lo == doctest::Approx(std::atan(x)).epsilon(5e-3));

    // in the small-signal regime the step matches q*dC/C_tot
    auto small = setup;
    small.dut.moms[0].value = 20e-18;
    const auto trace2 = synthesize_baseband(small);
    double lo2 = 1e9, hi2 = -1e9;
    for (double p : trace2.phase) {
        lo2 = std::min(lo2, p);
        hi2 = std::max(hi2, p);
    }
    CHECK(hi2 - lo2 ==
          doctest::Approx(phase_shift_small_signal(std::abs(res.q), 20e-18, tank.totalCap()))
              .epsilon(5e-3));
}

TEST_CASE("synthesis input validation") {
    const auto cfg = default_config();
    auto setup = base_setup(cfg, 1e-3, 100e3);
    SUBCASE("sample rate below 20x f2") {
        setup.exc.modKind = ModKind::dutSwitch;
        setup.exc.f2 = 10e3;
        setup.dut.selected = "mom0";
        CHECK_THROWS_AS(synthesize_baseband(setup), std::invalid_argument);
    }
    SUBCASE("memory cap") {
        setup.duration = 1e4;
        CHECK_THROWS_AS(synthesize_baseband(setup), std::invalid_argument);
    }
    SUBCASE("unstable tank") {
        auto bad = cfg;
        bad.gyrator.alphaR = 3e14;
        auto s2 = base_setup(bad, 1e-3, 100e3);
        s2.chain = make_chain(bad, 0, 15);
        CHECK_THROWS_AS(synthesize_baseband(s2), std::runtime_error);
    }
}

TEST_CASE("white phase noise PSD sits at the configured plateau") {
    auto cfg = default_config();
    const double plateau = deg_to_rad(2e-3);  // 2 mdeg/rtHz
    const double fs = 65536.0;
    double acc = 0.0;
    int count = 0;
    std::vector<double> band;
    for (int seed = 0; seed < 8; ++seed) {
        auto setup = base_setup(cfg, 1.0, fs);
        setup.noise.whitePhase = plateau;
        setup.noise.flickerCorner = 0.0;
        setup.noise.seed = derive_seed(7, seed);
        const auto trace = synthesize_baseband(setup);
        std::vector<double> ph = trace.phase;
        const double mean = std::arg(chain_transfer(setup.chain, trace.f1).h);
        for (auto& p : ph) p -= mean;
        const auto est = welch_psd(ph, fs, 4096);
        for (std::size_t i = 0; i < est.freq.size(); ++i) {
            if (est.freq[i] >= 1e3 && est.freq[i] <= fs / 4.0) {
                acc += est.psd[i];
                ++count;
            }
        }
    }
    const double measured = std::sqrt(acc / count);
    CHECK(measured == doctest::Approx(plateau).epsilon(0.10));
}

TEST_CASE("phase noise PSD conformance: white + flicker within 1.5 dB over two decades") {
    auto cfg = default_config();
    const double fs = 65536.0;
    const double w = 2e-3;  // rad/rtHz
    const double corner = 300.0;
    std::vector<double> accum;
    int nseeds = 32;
    for (int seed = 0; seed < nseeds; ++seed) {
        NoiseSpec spec;
        spec.whitePhase = w;
        spec.flickerCorner = corner;
        spec.bandwidth = fs;  // keep the white component flat through the band
        spec.seed = derive_seed(99, seed);
        PhaseNoiseGenerator gen(spec, fs, fs);
        std::vector<double> x(1 << 17);
        for (auto& v : x) v = gen.next();
        const auto est = welch_psd(x, fs, 8192);
        if (accum.empty()) accum.assign(est.psd.size(), 0.0);
        for (std::size_t i = 0; i < est.psd.size(); ++i) accum[i] += est.psd[i];
        if (seed == 0) {
            // frequencies fixed across seeds
        }
    }
    NoiseSpec spec;
    spec.whitePhase = w;
    spec.flickerCorner = corner;
    spec.bandwidth = fs;
    PhaseNoiseGenerator gen(spec, fs, fs);
    const auto ref = welch_psd(std::vector<double>(8192, 0.0), fs, 8192);
    for (std::size_t i = 0; i < accum.size(); ++i) {
        const double f = ref.freq[i];
        if (f < 10.0 || f > 1000.0) continue;
        const double target = w * w * (1.0 + corner / f);
        const double measured = accum[i] / nseeds;
        const double errDb = 10.0 * std::log10(measured / target);
        CHECK(std::abs(errDb) < 1.5);
    }
}

TEST_CASE("determinism: same config and seed give bit-identical traces") {
    auto cfg = default_config();
    auto setup = base_setup(cfg, 5e-3, 100e3);
    setup.noise = make_noise(cfg);
    setup.noise.seed = 1234;
    const auto a = synthesize_baseband(setup);
    const auto b = synthesize_baseband(setup);
    REQUIRE(a.iq.size() == b.iq.size());
    for (std::size_t i = 0; i < a.iq.size(); ++i) {
        CHECK(a.iq[i] == b.iq[i]);
        CHECK(a.phase[i] == b.phase[i]);
    }
}

TEST_CASE("parseval: harmonic decomposition accounts for the total power") {
    auto cfg = default_config();
    auto setup = base_setup(cfg, 20e-3, 200e3);
    setup.dut.selected = "mom0";
    setup.exc.modKind = ModKind::dutSwitch;
    setup.exc.f2 = 1e3;
    const auto trace = synthesize_baseband(setup);
    // total AC power of the phase channel vs sum of odd-harmonic powers of the
    // ideal two-level wave (noise off)
    double mean = 0.0;
    for (double p : trace.phase) mean += p;
    mean /= static_cast<double>(trace.phase.size());
    double total = 0.0;
    for (double p : trace.phase) total += (p - mean) * (p - mean);
    total /= static_cast<double>(trace.phase.size());
    // two-level wave of half amplitude a has AC power a^2
    double lo = 1e9, hi = -1e9;
    for (double p : trace.phase) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    const double a = 0.5 * (hi - lo);
    CHECK(total == doctest::Approx(a * a).epsilon(1e-3));
}

TEST_CASE("method I boxcar demodulation") {
    SUBCASE("constant input gives identical windows") {
        const auto cfg = default_config();
        auto setup = base_setup(cfg, 2e-3, 100e3);
        const auto trace = synthesize_baseband(setup);
        const auto d = demod_single(trace, 100e-6);
        for (std::size_t i = 1; i < d.phase.size(); ++i) {
            CHECK(d.phase[i] == doctest::Approx(d.phase[0]));
            CHECK(d.amplitude[i] == doctest::Approx(d.amplitude[0]));
        }
        CHECK(d.times[1] - d.times[0] == doctest::Approx(d.tint));
    }
    SUBCASE("square wave becomes trapezoidal with tint ramps") {
        auto cfg = default_config();
        auto setup = base_setup(cfg, 20e-3, 1e6);
        setup.dut.selected = "mom0";
        setup.exc.modKind = ModKind::dutSwitch;
        setup.exc.f2 = 1e3;
        const auto trace = synthesize_baseband(setup);
        const auto d = demod_single(trace, 100e-6);
        // window rate 10 kHz: 5 windows per half-period; the edge-aligned
        // windows sit entirely inside a state, so levels alternate cleanly
        double lo = 1e9, hi = -1e9;
        for (double p : d.phase) {
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
        int atLo = 0, atHi = 0, between = 0;
        for (double p : d.phase) {
            if (std::abs(p - lo) < 1e-6) {
                ++atLo;
            } else if (std::abs(p - hi) < 1e-6) {
                ++atHi;
            } else {
                ++between;
            }
        }
        CHECK(atLo > 0);
        CHECK(atHi > 0);
        CHECK(between == 0);  // aligned windows: pure two-level output
        // offset windows would straddle the transitions; checked via a finer
        // tint that does not divide the half-period
        const auto d2 = demod_single(trace, 300e-6);
        double lo2 = 1e9, hi2 = -1e9;
        int mid2 = 0;
        for (double p : d2.phase) {
            lo2 = std::min(lo2, p);
            hi2 = std::max(hi2, p);
        }
        for (double p : d2.phase) {
            if (p > lo2 + 1e-6 && p < hi2 - 1e-6) ++mid2;
        }
        CHECK(mid2 > 0);
    }
    SUBCASE("white-noise variance scales as 1/tint") {
        auto cfg = default_config();
        auto setup = base_setup(cfg, 4.0, 50e3);
        setup.noise.whitePhase = 1e-3;
        setup.noise.bandwidth = 25e3;
        setup.noise.seed = 5;
        const auto trace = synthesize_baseband(setup);
        auto varAt = [&](double tint) {
            const auto d = demod_single(trace, tint);
            double m = 0.0;
            for (double p : d.phase) m += p;
            m /= static_cast<double>(d.phase.size());
            double v = 0.0;
            for (double p : d.phase) v += (p - m) * (p - m);
            return v / static_cast<double>(d.phase.size() - 1);
        };
        const double v1 = varAt(1e-3);
        const double v10 = varAt(10e-3);
        CHECK(v1 / v10 == doctest::Approx(10.0).epsilon(0.20));
    }
    SUBCASE("errors") {
        const auto cfg = default_config();
        auto setup = base_setup(cfg, 1e-3, 100e3);
        const auto trace = synthesize_baseband(setup);
        CHECK_THROWS_AS(demod_single(trace, 5e-6), std::invalid_argument);   // < 2 samples
        CHECK_THROWS_AS(demod_single(trace, 10e-3), std::invalid_argument);  // > trace
    }
}

TEST_CASE("method IIa lock-in") {
    const double rate = 50e3, f2 = 1e3;
    const std::size_t n = 50000;
    SUBCASE("ideal square wave of half-amplitude a returns a") {
        std::vector<double> ph(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = (i + 0.5) / rate;
            ph[i] = (std::fmod(t * f2, 1.0) < 0.5) ? 0.3 : -0.3;
        }
        const auto d = demod_double_amplitude(synthetic_phase_stream(ph, rate), f2, 10e-3);
        for (double a : d.amplitude) CHECK(a == doctest::Approx(0.3).epsilon(1e-3));
    }
    SUBCASE("dc-only phase gives zero") {
        std::vector<double> ph(n, 0.7);
        const auto d = demod_double_amplitude(synthetic_phase_stream(ph, rate), f2, 10e-3);
        for (double a : d.amplitude) CHECK(std::abs(a) < 1e-12);
    }
    SUBCASE("slow drift is rejected while method-I means shift") {
        std::vector<double> ph(n);
        const double drift = 0.5;  // rad over the full second
        for (std::size_t i = 0; i < n; ++i) {
            const double t = (i + 0.5) / rate;
            ph[i] = ((std::fmod(t * f2, 1.0) < 0.5) ? 0.3 : -0.3) + drift * t;
        }
        const auto stream = synthetic_phase_stream(ph, rate);
        const auto d = demod_double_amplitude(stream, f2, 100e-3);
        for (double a : d.amplitude) CHECK(a == doctest::Approx(0.3).epsilon(0.01));
        // method-I style window means move by the drift
        double first = 0.0, last = 0.0;
        for (std::size_t i = 0; i < 5000; ++i) first += ph[i];
        for (std::size_t i = n - 5000; i < n; ++i) last += ph[i];
        CHECK(std::abs(last - first) / 5000.0 > 0.05);
    }
    SUBCASE("rate mismatch is rejected") {
        std::vector<double> ph(100, 0.0);
        CHECK_THROWS_AS(demod_double_amplitude(synthetic_phase_stream(ph, 5e3), 1e3, 10e-3),
                        std::invalid_argument);
    }
}

TEST_CASE("method IIb derivative estimation") {
    const double rate = 20e3, f2 = 1e3, alpha = 5.6e14, deltaV = 3.1e-3;
    SUBCASE("linear capacitance ramp returns the slope for any deltaV") {
        for (double dv : {1e-3, 10e-3, 50e-3}) {
            const double slope = 4e-15;  // F/V
            const std::size_t n = 20000;
            std::vector<double> ph(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double t = (i + 0.5) / rate;
                const double c = slope * dv * std::sin(2.0 * kPi * f2 * t);
                ph[i] = -alpha * c;  // phase moves opposite to capacitance
            }
            const auto est =
                demod_derivative_stream(synthetic_phase_stream(ph, rate), f2, 0.5, alpha, dv);
            for (double v : est) CHECK(v == doctest::Approx(slope).epsilon(1e-9));
        }
    }
    SUBCASE("uncalibrated sensitivity is rejected") {
        std::vector<double> ph(1000, 0.0);
        CHECK_THROWS_AS(
            demod_derivative_stream(synthetic_phase_stream(ph, rate), f2, 0.05, 0.0, deltaV),
            std::invalid_argument);
    }
}

TEST_CASE("full IIb path matches the harmonic-average oracle") {
    auto cfg = default_config();
    const auto chain = make_chain(cfg, 0, 0);
    const auto res = resonance(chain.tank);
    const double alpha = std::abs(res.q) / chain.tank.totalCap();
    const auto& fet = cfg.fets.front();
    NoiseSpec off;
    const double dv = 3.1e-3;
    // independent oracle: first-harmonic average of C(v0 + dv sin) over theta
    auto harmonicAvg = [&](double v0) {
        const int n = 4096;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double th = 2.0 * kPi * (i + 0.5) / n;
            acc += fet_cgg(fet, v0 + dv * std::sin(th), 6.0) * std::sin(th);
        }
        return 2.0 * acc / n / dv;
    };
    for (double vgs0 : {-0.05, -0.034, 0.0, 0.004, 0.05}) {
        DutBank bank = make_dut_bank(cfg);
        bank.vbias = bank.vcm - vgs0;
        const double est = measure_dcdv_point(chain, bank, fet.name, off, 6.0, 1e3, dv, 12e-3,
                                              40e3, alpha);
        const double oracle = harmonicAvg(vgs0);
        CHECK(std::abs(est - oracle) < 0.01 * 3.1e-15 + 1e-18);
        // and the oracle itself stays close to the analytic derivative
        CHECK(std::abs(oracle - fet_dcgg_dv(fet, vgs0, 6.0)) < 2e-16);
    }
}

TEST_CASE("large excitation smears the peak-dip amplitude by more than 20%") {
    auto cfg = default_config();
    const auto chain = make_chain(cfg, 0, 0);
    const auto res = resonance(chain.tank);
    const double alpha = std::abs(res.q) / chain.tank.totalCap();
    const auto& fet = cfg.fets.front();
    NoiseSpec off;
    auto sweepAmp = [&](double dv) {
        double lo = 1e9, hi = -1e9;
        for (double vgs0 = -0.06; vgs0 <= 0.06; vgs0 += 2e-3) {
            DutBank bank = make_dut_bank(cfg);
            bank.vbias = bank.vcm - vgs0;
            const double est = measure_dcdv_point(chain, bank, fet.name, off, 6.0, 1e3, dv,
                                                  12e-3, 40e3, alpha);
            lo = std::min(lo, est);
            hi = std::max(hi, est);
        }
        return hi - lo;
    };
    const double smallAmp = sweepAmp(3.1e-3);
    const double bigAmp = sweepAmp(25e-3);
    CHECK(bigAmp < 0.8 * smallAmp);
}
