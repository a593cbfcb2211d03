#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "impedancemetry/chain.hpp"
#include "impedancemetry/dut.hpp"
#include "impedancemetry/rng.hpp"

namespace impedancemetry {

// Phase-noise model: one-sided PSD whitePhase^2 * (1 + flickerCorner/f),
// band-limited at `bandwidth` (0 = auto, the tank linewidth fr/|q| at the
// operating point). Without a band limit the integrated phase variance would
// diverge with sample rate, which no physical resonator does.
struct NoiseSpec {
    double whitePhase = 0.0;     // rad/sqrt(Hz)
    double flickerCorner = 0.0;  // Hz; 0 disables flicker
    std::uint64_t seed = 0;
    double bandwidth = 0.0;  // Hz; 0 = auto
    bool enabled() const { return whitePhase > 0.0; }
};

enum class ModKind { none, dutSwitch, vbiasSine };

struct Excitation {
    double f1 = 0.0;         // Hz; 0 = auto (resonance of the base state)
    double amplitude = 0.0;  // V; 0 = auto (voutTarget at resonance)
    double f2 = 0.0;         // Hz, low-frequency modulation
    ModKind modKind = ModKind::none;
    double modAmplitude = 0.0;  // V for vbiasSine (peak vgs excursion)
};

enum class DemodMethod { I, IIa, IIb };

struct DemodResult {
    std::vector<double> times;
    std::vector<double> amplitude;
    std::vector<double> phase;
    double tint = 0.0;
    DemodMethod method = DemodMethod::I;
    double rate() const { return 1.0 / tint; }
};

// Complex envelope at the carrier plus the unwrapped instantaneous phase
// channel (arg of the chain response plus the injected phase noise).
struct BasebandTrace {
    double fs = 0.0;
    double f1 = 0.0;
    double vin = 0.0;
    std::vector<std::complex<double>> iq;
    std::vector<double> phase;
    bool amplitudeWarning = false;
};

struct SynthesisSetup {
    ChainConfig chain;
    DutBank dut;
    Excitation exc;
    NoiseSpec noise;
    double duration = 0.0;  // s
    double fs = 0.0;        // envelope sample rate, Hz
    double vbg = 0.0;       // back-gate voltage for FET devices
};

inline constexpr std::size_t kMaxTraceSamples = 1u << 26;

// Band-limited white + octave-filtered 1/f phase-noise source. Deterministic
// for a given seed; PSD matches NoiseSpec within the conformance bounds
// asserted in the tests.
class PhaseNoiseGenerator {
  public:
    PhaseNoiseGenerator(const NoiseSpec& spec, double fs, double autoBandwidth);
    double next();

  private:
    struct Ar1 {
        double rho = 0.0;
        double sigma = 0.0;  // drive std-dev
        double state = 0.0;
    };
    GaussianStream rng_;
    double whiteSigma_ = 0.0;
    bool whiteBandlimited_ = false;
    Ar1 white_;
    std::vector<Ar1> flicker_;
};

BasebandTrace synthesize_baseband(const SynthesisSetup& setup);

// Method I: boxcar windows of tint. Amplitude is |complex mean|; phase is the
// mean of the instantaneous phase channel (a phase-tracking demodulator; for
// small integrated phase noise this coincides with arg of the complex mean).
DemodResult demod_single(const BasebandTrace& trace, double tint);

// Method IIa: lock-in at f2 on a phase stream, square-wave reference reduced
// to its fundamental; output scaled by pi/4 so a +-a square wave returns a.
DemodResult demod_double_amplitude(const DemodResult& phaseStream, double f2, double tint2);

// Method IIb conversion: signed in-phase lock-in of the phase stream at f2,
// scaled to a dC/dV estimate through the calibrated sensitivity alpha (rad/F)
// and the vgs excitation amplitude deltaV. One output per tint2 window.
std::vector<double> demod_derivative_stream(const DemodResult& phaseStream, double f2,
                                            double tint2, double alpha, double deltaV);

// Full method IIb at one bias point: synthesize with vgs sine modulation and
// demodulate twice. Returns the dC/dV estimate averaged over the usable
// windows. The probe runs at the local resonance of the bias point.
double measure_dcdv_point(const ChainConfig& chain, const DutBank& bank,
                          const std::string& fetId, const NoiseSpec& noise, double vbg,
                          double f2, double deltaV, double duration, double fs, double alpha);

}  // namespace impedancemetry
