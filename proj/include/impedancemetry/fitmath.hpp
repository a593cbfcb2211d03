#pragma once

#include <complex>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace impedancemetry {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LineFit linear_fit(std::span<const double> x, std::span<const double> y);

// Zero-intercept least squares y = s*x. r2 is computed about zero.
struct ZeroInterceptFit {
    double slope = 0.0;
    double r2 = 0.0;
    double maxResidual = 0.0;
};
ZeroInterceptFit zero_intercept_fit(std::span<const double> x, std::span<const double> y,
                                    std::span<const double> weights = {});

// Solves the dense system a*x = b in place (partial pivoting). n <= ~16.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int n);

// Maximum of a unimodal function on [a, b] by golden-section search.
double golden_section_max(const std::function<double(double)>& f, double a, double b,
                          double relTol);

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol);

// In-place complex FFT, arbitrary length (radix-2 with Bluestein fallback).
void fft(std::vector<std::complex<double>>& data, bool inverse = false);

// Averaged one-sided Welch periodogram (Hann window, 50% overlap, per-segment
// mean removal). Returns (frequencies, psd); psd is one-sided density, units
// of input^2 / Hz.
struct PsdEstimate {
    std::vector<double> freq;
    std::vector<double> psd;
};
PsdEstimate welch_psd(std::span<const double> x, double fs, int segmentLength);

}  // namespace impedancemetry
