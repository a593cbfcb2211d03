#pragma once

#include <span>
#include <utility>
#include <vector>

namespace impedancemetry {

// Phase/capacitance conventions used by every fit in this module:
//  - sensitivity alpha is phase per farad, alpha = q / C_tot in radians;
//  - a connected/disconnected square wave of a capacitor C_m produces a phase
//    square wave of half-amplitude alpha*C_m/2 (the lock-in fundamental carries
//    a 4/pi factor which demod_double_amplitude already removes);
//  - large swings compress as atan(alpha*C_m); experiments that fit straight
//    lines through phase steps first linearize with tan();
//  - input-referred capacitance noise is phase noise density / alpha.

struct QExtraction {
    double fr = 0.0;
    double q = 0.0;
    double slope = 0.0;  // rad/Hz at fr
};

// Linear fit of phase vs frequency around resonance. The fit window is the
// central 20% of the half-linewidth fr/(2 q); across the full half-linewidth
// the arctangent curvature would bias the slope by tens of percent. Phase
// samples must be de-embedded of any frequency-independent chain offset only
// if the resonance position is wanted in absolute terms; the slope (and
// therefore q) is offset-free.
QExtraction extract_q(std::span<const double> freq, std::span<const double> phase, double frHint,
                      double qHint);

struct SensitivityFit {
    std::vector<std::pair<double, double>> alphaPoints;  // (q, alpha rad/F)
    double slope = 0.0;                                  // per farad
    double cTotRecovered = 0.0;                          // F
    double r2 = 0.0;
    double maxResidual = 0.0;
};

// Zero-intercept least squares of alpha(q); cTotRecovered = 1/slope.
SensitivityFit fit_sensitivity(const std::vector<std::pair<double, double>>& points);

struct SnrReport {
    double pSig = 0.0;    // rad^2
    double pNoise = 0.0;  // rad^2
    double snr = 0.0;
    double tint = 0.0;          // s
    double cmEquivalent = 0.0;  // F, = cm/snr
    bool capped = false;
    int periodsUsed = 0;
};

// Power separation of a switched-capacitor phase trace. The trace is cropped
// to an integer number of switching periods, mean-removed, windowed with a
// 3-term flat top (leakage support exactly +-2 bins), and FFT'd. Signal power
// is the sum over odd-harmonic bin groups of fsw; noise power is everything
// else below the demodulation bandwidth; DC group excluded from both.
SnrReport snr_from_square_wave(std::span<const double> phase, double rate, double fsw,
                               double tint, double cm, double ceiling = 1e9);

struct ResolutionFit {
    std::vector<std::pair<double, double>> points;  // (tint s, cm F)
    double a = 0.0;                                 // F*sqrt(s), constrained -1/2 fit
    double sc = 0.0;                                // F/sqrt(Hz), = a/sqrt(0.250)
    double exponent = 0.0;                          // free log-log exponent
    bool nonWhiteFlag = false;                      // exponent outside [-0.65, -0.35]
};

ResolutionFit fit_resolution(const std::vector<std::pair<double, double>>& points);

double input_referred_noise(double phaseNoiseDensity, double alpha);

}  // namespace impedancemetry
