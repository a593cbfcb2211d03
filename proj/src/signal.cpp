#include "impedancemetry/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "impedancemetry/rng.hpp"
#include "impedancemetry/units.hpp"

namespace impedancemetry {

namespace {

double ar1_psd_unit(double f, double fs, double rho) {
    // one-sided PSD of x[n] = rho*x[n-1] + e[n] with unit drive variance
    const double th = 2.0 * kPi * f / fs;
    return (2.0 / fs) / (1.0 - 2.0 * rho * std::cos(th) + rho * rho);
}

}  // namespace

PhaseNoiseGenerator::PhaseNoiseGenerator(const NoiseSpec& spec, double fs, double autoBandwidth)
    : rng_(spec.seed) {
    if (!spec.enabled()) return;
    const double s2 = spec.whitePhase * spec.whitePhase;
    const double bw = spec.bandwidth > 0.0 ? spec.bandwidth : autoBandwidth;

    if (bw > 0.0 && bw < fs / 2.0) {
        // band-limited white: AR(1) with plateau whitePhase^2
        whiteBandlimited_ = true;
        white_.rho = std::exp(-2.0 * kPi * bw / fs);
        const double v = s2 * fs * (1.0 - white_.rho) * (1.0 - white_.rho) / 2.0;
        white_.sigma = std::sqrt(v);
        white_.state = rng_.normal() * std::sqrt(v / (1.0 - white_.rho * white_.rho));
    } else {
        whiteSigma_ = spec.whitePhase * std::sqrt(fs / 2.0);
    }

    if (spec.flickerCorner > 0.0) {
        const double fHi = fs / 4.0;
        int k = static_cast<int>(std::ceil(std::log2(fHi / 0.05)));
        k = std::clamp(k, 12, 24);
        std::vector<double> poles(static_cast<std::size_t>(k));
        std::vector<double> vUnit(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            poles[i] = fHi / std::pow(2.0, i);
            vUnit[i] = poles[i] * (2.0 * kPi * kPi / fs);
        }
        // Scale the octave bank against the 1/f target on a log grid
        // (relative least squares keeps the ripple symmetric in dB).
        const double fLo = 4.0 * poles.back();
        double num = 0.0, den = 0.0;
        const int grid = 160;
        for (int i = 0; i < grid; ++i) {
            const double f = fLo * std::pow((fs / 8.0) / fLo, static_cast<double>(i) / (grid - 1));
            double m = 0.0;
            for (int j = 0; j < k; ++j) {
                const double rho = std::exp(-2.0 * kPi * poles[j] / fs);
                m += vUnit[j] * ar1_psd_unit(f, fs, rho);
            }
            const double ratio = m * f;  // model / (1/f)
            num += ratio;
            den += ratio * ratio;
        }
        const double beta = num / den;
        flicker_.resize(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            auto& fl = flicker_[static_cast<std::size_t>(i)];
            fl.rho = std::exp(-2.0 * kPi * poles[i] / fs);
            const double v = s2 * spec.flickerCorner * beta * vUnit[i];
            fl.sigma = std::sqrt(v);
            fl.state = rng_.normal() * std::sqrt(v / (1.0 - fl.rho * fl.rho));
        }
    }
}

double PhaseNoiseGenerator::next() {
    double out = 0.0;
    if (whiteBandlimited_) {
        white_.state = white_.rho * white_.state + white_.sigma * rng_.normal();
        out += white_.state;
    } else if (whiteSigma_ > 0.0) {
        out += whiteSigma_ * rng_.normal();
    }
    for (auto& fl : flicker_) {
        fl.state = fl.rho * fl.state + fl.sigma * rng_.normal();
        out += fl.state;
    }
    return out;
}

namespace {

double base_dut_capacitance(const SynthesisSetup& setup) {
    const auto& dut = setup.dut;
    if (setup.exc.modKind == ModKind::dutSwitch) {
        // switching starts from the disconnected state
        return deselected_capacitance(dut);
    }
    if (dut.selected) {
        return select_dut(dut, *dut.selected, setup.vbg).dutCap;
    }
    return deselected_capacitance(dut);
}

}  // namespace

BasebandTrace synthesize_baseband(const SynthesisSetup& setup) {
    if (!(setup.fs > 0.0) || !(setup.duration > 0.0)) {
        throw std::invalid_argument("synthesize: fs and duration must be > 0");
    }
    const auto nSamples = static_cast<std::size_t>(std::llround(setup.duration * setup.fs));
    if (nSamples < 2) throw std::invalid_argument("synthesize: trace too short");
    if (nSamples > kMaxTraceSamples) {
        throw std::invalid_argument("synthesize: duration*fs exceeds the memory cap");
    }
    const Excitation& exc = setup.exc;
    if (exc.modKind != ModKind::none) {
        if (!(exc.f2 > 0.0)) throw std::invalid_argument("synthesize: modulation needs f2 > 0");
        if (setup.fs < 20.0 * exc.f2) {
            throw std::invalid_argument("synthesize: sample rate below 20x the modulation rate");
        }
    }

    ChainConfig chain = setup.chain;
    const double baseCap = base_dut_capacitance(setup);
    chain.tank.dutCap = baseCap;
    const TankResponse baseRes = resonance(chain.tank);
    if (!baseRes.stable) throw std::runtime_error("synthesize: unstable tank configuration");

    BasebandTrace trace;
    trace.fs = setup.fs;
    trace.f1 = exc.f1 > 0.0 ? exc.f1 : baseRes.fr;
    if (exc.modKind != ModKind::none && exc.f2 > trace.f1 / 1000.0) {
        throw std::invalid_argument("synthesize: f2 must be well below the carrier");
    }
    const std::complex<double> hBase = chain_transfer(chain, trace.f1).h;
    trace.vin = exc.amplitude > 0.0 ? exc.amplitude : chain.voutTarget / std::abs(hBase);

    NoiseSpec noise = setup.noise;
    const double autoBw = baseRes.fr / std::max(std::abs(baseRes.q), 1.0);
    PhaseNoiseGenerator gen(noise, setup.fs, autoBw);

    trace.iq.resize(nSamples);
    trace.phase.resize(nSamples);

    // per-state chain responses for the switched experiment
    std::complex<double> hOn;
    if (exc.modKind == ModKind::dutSwitch) {
        if (!setup.dut.selected) {
            throw std::invalid_argument("synthesize: dut-switch modulation needs a selected DUT");
        }
        const DutSelection sel = select_dut(setup.dut, *setup.dut.selected, setup.vbg);
        hOn = chain_transfer_with_dut(chain, trace.f1, sel.dutCap).h;
    }

    const FetCvModel* fet = nullptr;
    double vgs0 = 0.0;
    if (exc.modKind == ModKind::vbiasSine) {
        if (!setup.dut.selected) {
            throw std::invalid_argument("synthesize: vbias-sine modulation needs a selected DUT");
        }
        const DutSelection sel = select_dut(setup.dut, *setup.dut.selected, setup.vbg);
        if (!sel.isFet) {
            throw std::invalid_argument("synthesize: vbias-sine modulation needs a FET DUT");
        }
        fet = sel.fet;
        vgs0 = sel.vgs;
    }

    const double argBase = std::arg(hBase);
    const double argOn = exc.modKind == ModKind::dutSwitch ? std::arg(hOn) : 0.0;
    double prevArg = argBase;
    double maxAbs = 0.0;
    for (std::size_t n = 0; n < nSamples; ++n) {
        const double t = static_cast<double>(n) / setup.fs;
        std::complex<double> h = hBase;
        double argH = argBase;
        switch (exc.modKind) {
            case ModKind::none:
                break;
            case ModKind::dutSwitch: {
                const bool connected =
                    (static_cast<long long>(std::floor(t * exc.f2 * 2.0)) % 2) == 0;
                if (connected) {
                    h = hOn;
                    argH = argOn;
                }
                break;
            }
            case ModKind::vbiasSine: {
                const double vgs = vgs0 + exc.modAmplitude * std::sin(2.0 * kPi * exc.f2 * t);
                const double c =
                    fet_cgg(*fet, vgs, setup.vbg) + setup.dut.offStateParasitic;
                h = chain_transfer_with_dut(chain, trace.f1, c).h;
                argH = std::arg(h);
                // keep the phase channel continuous
                argH += 2.0 * kPi * std::round((prevArg - argH) / (2.0 * kPi));
                prevArg = argH;
                break;
            }
        }
        const double noisePhase = noise.enabled() ? gen.next() : 0.0;
        const std::complex<double> rot(std::cos(noisePhase), std::sin(noisePhase));
        trace.iq[n] = h * trace.vin * rot;
        trace.phase[n] = argH + noisePhase;
        maxAbs = std::max(maxAbs, std::abs(trace.iq[n]));
    }
    trace.amplitudeWarning = maxAbs > chain.maxAmplitudeWarn;
    return trace;
}

DemodResult demod_single(const BasebandTrace& trace, double tint) {
    const double mReal = tint * trace.fs;
    const auto m = static_cast<std::size_t>(std::llround(mReal));
    if (m < 2) throw std::invalid_argument("demod_single: tint below 2 samples");
    if (std::abs(mReal - static_cast<double>(m)) > 1e-6 * mReal) {
        throw std::invalid_argument("demod_single: tint must be an integer number of samples");
    }
    if (m > trace.iq.size()) throw std::invalid_argument("demod_single: tint exceeds the trace");
    const std::size_t nw = trace.iq.size() / m;
    DemodResult out;
    out.tint = tint;
    out.method = DemodMethod::I;
    out.times.resize(nw);
    out.amplitude.resize(nw);
    out.phase.resize(nw);
    for (std::size_t k = 0; k < nw; ++k) {
        std::complex<double> acc(0.0, 0.0);
        double phAcc = 0.0;
        const std::size_t off = k * m;
        for (std::size_t i = 0; i < m; ++i) {
            acc += trace.iq[off + i];
            phAcc += trace.phase[off + i];
        }
        out.times[k] = (static_cast<double>(k) + 0.5) * tint;
        out.amplitude[k] = std::abs(acc) / static_cast<double>(m);
        out.phase[k] = phAcc / static_cast<double>(m);
    }
    return out;
}

namespace {

void check_stream_rate(const DemodResult& stream, double f2) {
    if (!(f2 > 0.0)) throw std::invalid_argument("second demodulation: f2 must be > 0");
    if (stream.rate() + 1e-9 < 10.0 * f2) {
        throw std::invalid_argument("second demodulation: phase stream rate below 10x f2");
    }
}

}  // namespace

DemodResult demod_double_amplitude(const DemodResult& phaseStream, double f2, double tint2) {
    check_stream_rate(phaseStream, f2);
    const double rate = phaseStream.rate();
    const auto n2 = static_cast<std::size_t>(std::llround(tint2 * rate));
    if (n2 < static_cast<std::size_t>(std::ceil(rate / f2))) {
        throw std::invalid_argument("demod_double_amplitude: tint2 below one modulation period");
    }
    if (n2 > phaseStream.phase.size()) {
        throw std::invalid_argument("demod_double_amplitude: tint2 exceeds the stream");
    }
    const std::size_t nw = phaseStream.phase.size() / n2;
    DemodResult out;
    out.tint = tint2;
    out.method = DemodMethod::IIa;
    out.times.resize(nw);
    out.amplitude.resize(nw);
    out.phase.resize(nw);
    for (std::size_t k = 0; k < nw; ++k) {
        double xc = 0.0, xs = 0.0;
        const std::size_t off = k * n2;
        for (std::size_t i = 0; i < n2; ++i) {
            const double t = phaseStream.times[off + i];
            const double ph = phaseStream.phase[off + i];
            xc += ph * std::sin(2.0 * kPi * f2 * t);
            xs += ph * std::cos(2.0 * kPi * f2 * t);
        }
        xc *= 2.0 / static_cast<double>(n2);
        xs *= 2.0 / static_cast<double>(n2);
        out.times[k] = phaseStream.times[off] + 0.5 * tint2;
        out.amplitude[k] = (kPi / 4.0) * std::hypot(xc, xs);
        out.phase[k] = std::atan2(xs, xc);
    }
    return out;
}

std::vector<double> demod_derivative_stream(const DemodResult& phaseStream, double f2,
                                            double tint2, double alpha, double deltaV) {
    if (!(alpha > 0.0)) throw std::invalid_argument("demod_derivative: sensitivity uncalibrated");
    if (!(deltaV > 0.0)) throw std::invalid_argument("demod_derivative: deltaV must be > 0");
    check_stream_rate(phaseStream, f2);
    const double rate = phaseStream.rate();
    const auto n2 = static_cast<std::size_t>(std::llround(tint2 * rate));
    if (n2 < static_cast<std::size_t>(std::ceil(rate / f2)) || n2 > phaseStream.phase.size()) {
        throw std::invalid_argument("demod_derivative: bad tint2");
    }
    const std::size_t nw = phaseStream.phase.size() / n2;
    std::vector<double> out(nw);
    for (std::size_t k = 0; k < nw; ++k) {
        double x = 0.0;
        const std::size_t off = k * n2;
        for (std::size_t i = 0; i < n2; ++i) {
            x += phaseStream.phase[off + i] *
                 std::sin(2.0 * kPi * f2 * phaseStream.times[off + i]);
        }
        x *= 2.0 / static_cast<double>(n2);
        // the tank phase moves opposite to the capacitance
        out[k] = -x / (alpha * deltaV);
    }
    return out;
}

double measure_dcdv_point(const ChainConfig& chain, const DutBank& bank,
                          const std::string& fetId, const NoiseSpec& noise, double vbg,
                          double f2, double deltaV, double duration, double fs, double alpha) {
    SynthesisSetup setup;
    setup.chain = chain;
    setup.dut = bank;
    setup.dut.selected = fetId;
    setup.noise = noise;
    setup.duration = duration;
    setup.fs = fs;
    setup.vbg = vbg;
    setup.exc.f2 = f2;
    setup.exc.modKind = ModKind::vbiasSine;
    setup.exc.modAmplitude = deltaV;

    const BasebandTrace trace = synthesize_baseband(setup);
    const DemodResult stream = demod_single(trace, 2.0 / fs);
    const auto periods = static_cast<int>(std::floor(duration * f2)) - 1;
    if (periods < 1) throw std::invalid_argument("measure_dcdv_point: trace too short");
    const double tint2 = static_cast<double>(periods) / f2;
    const auto vals = demod_derivative_stream(stream, f2, tint2, alpha, deltaV);
    double acc = 0.0;
    for (double v : vals) acc += v;
    return acc / static_cast<double>(vals.size());
}

}  // namespace impedancemetry
