#include "impedancemetry/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "impedancemetry/fitmath.hpp"
#include "impedancemetry/units.hpp"

namespace impedancemetry {

QExtraction extract_q(std::span<const double> freq, std::span<const double> phase, double frHint,
                      double qHint) {
    if (freq.size() != phase.size()) throw std::invalid_argument("extract_q: size mismatch");
    if (!(frHint > 0.0) || !(qHint > 0.0)) {
        throw std::invalid_argument("extract_q: need positive fr and q hints");
    }
    const double halfWidth = frHint / (2.0 * qHint);
    const double window = 0.2 * halfWidth;
    std::vector<double> fs, ps;
    for (std::size_t i = 0; i < freq.size(); ++i) {
        if (std::abs(freq[i] - frHint) <= window) {
            fs.push_back(freq[i]);
            ps.push_back(phase[i]);
        }
    }
    if (fs.size() < 5) {
        throw std::invalid_argument("extract_q: fewer than 5 samples in the fit window");
    }
    // least squares over {1, df, df^3}: the cubic term absorbs the arctangent
    // curvature of the resonance phase, which would otherwise bias the slope
    // by a few permille even in a narrow window
    const double f0 = frHint;
    double a[9] = {0};
    double b[3] = {0};
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const double x = (fs[i] - f0) / window;
        const double basis[3] = {1.0, x, x * x * x};
        for (int r = 0; r < 3; ++r) {
            b[r] += basis[r] * ps[i];
            for (int c = 0; c < 3; ++c) a[r * 3 + c] += basis[r] * basis[c];
        }
    }
    const auto coef = solve_dense({a, a + 9}, {b, b + 3}, 3);
    QExtraction out;
    out.slope = coef[1] / window;
    if (out.slope == 0.0) throw std::runtime_error("extract_q: flat phase, no crossing");
    out.fr = f0 - coef[0] / out.slope;
    if (out.fr < fs.front() - window || out.fr > fs.back() + window) {
        throw std::runtime_error("extract_q: no phase zero crossing in the fit window");
    }
    out.q = -(out.fr / 2.0) * out.slope;
    return out;
}

SensitivityFit fit_sensitivity(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("fit_sensitivity: need >= 2 points");
    double qFirst = points.front().first;
    bool distinct = false;
    for (const auto& p : points) {
        if (std::abs(p.first - qFirst) > 1e-9 * std::abs(qFirst)) distinct = true;
    }
    if (!distinct) throw std::invalid_argument("fit_sensitivity: degenerate (single q)");
    std::vector<double> qs, alphas;
    for (const auto& p : points) {
        qs.push_back(p.first);
        alphas.push_back(p.second);
    }
    const ZeroInterceptFit fit = zero_intercept_fit(qs, alphas);
    SensitivityFit out;
    out.alphaPoints = points;
    out.slope = fit.slope;
    out.cTotRecovered = 1.0 / fit.slope;
    out.r2 = fit.r2;
    out.maxResidual = fit.maxResidual;
    return out;
}

SnrReport snr_from_square_wave(std::span<const double> phase, double rate, double fsw,
                               double tint, double cm, double ceiling) {
    if (!(fsw > 0.0) || !(rate > 0.0)) {
        throw std::invalid_argument("snr_from_square_wave: need positive rate and fsw");
    }
    const double periodsAvail = static_cast<double>(phase.size()) * fsw / rate;
    if (periodsAvail < 20.0) {
        throw std::invalid_argument("snr_from_square_wave: trace below 20 switching periods");
    }
    // Crop to the largest integer number of periods that lands on an integer
    // sample count; the harmonics are then exactly bin-aligned.
    const double spp = rate / fsw;
    int pUse = 0;
    std::size_t nUse = 0;
    for (int p = static_cast<int>(std::floor(periodsAvail)); p >= 20; --p) {
        const double n = p * spp;
        if (std::abs(n - std::round(n)) < 1e-9 * n) {
            pUse = p;
            nUse = static_cast<std::size_t>(std::llround(n));
            break;
        }
    }
    if (pUse == 0) {
        throw std::invalid_argument(
            "snr_from_square_wave: switching frequency is not bin-alignable at this rate");
    }

    double mean = 0.0;
    for (std::size_t i = 0; i < nUse; ++i) mean += phase[i];
    mean /= static_cast<double>(nUse);

    // 3-term flat top: cosine-sum windows leak into exactly +-(terms-1) bins
    // for bin-aligned tones.
    const double a0 = 0.26526, a1 = 0.5, a2 = 0.23474;
    std::vector<std::complex<double>> buf(nUse);
    double wpow = 0.0;
    for (std::size_t i = 0; i < nUse; ++i) {
        const double u = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(nUse);
        const double w = a0 - a1 * std::cos(u) + a2 * std::cos(2.0 * u);
        wpow += w * w;
        buf[i] = std::complex<double>((phase[i] - mean) * w, 0.0);
    }
    fft(buf, false);

    const std::size_t n = nUse;
    const double norm = wpow * static_cast<double>(n);
    double total = 0.0;
    std::vector<double> binPower(n);
    for (std::size_t k = 0; k < n; ++k) {
        binPower[k] = std::norm(buf[k]) / norm;
        total += binPower[k];
    }

    std::vector<char> used(n, 0);
    double pdc = 0.0;
    for (std::size_t d = 0; d <= 2; ++d) {
        const std::size_t k1 = d;
        const std::size_t k2 = (n - d) % n;
        if (!used[k1]) {
            pdc += binPower[k1];
            used[k1] = 1;
        }
        if (!used[k2]) {
            pdc += binPower[k2];
            used[k2] = 1;
        }
    }
    double psig = 0.0;
    const std::size_t fundamental = static_cast<std::size_t>(pUse);
    for (std::size_t h = 1; h * fundamental <= n / 2; h += 2) {
        for (int d = -2; d <= 2; ++d) {
            const std::size_t kk = static_cast<std::size_t>(
                static_cast<long long>(h * fundamental) + d);
            if (kk == 0 || kk > n / 2) continue;
            if (!used[kk]) {
                psig += binPower[kk];
                used[kk] = 1;
            }
            const std::size_t mirror = n - kk;
            if (!used[mirror]) {
                psig += binPower[mirror];
                used[mirror] = 1;
            }
        }
    }
    const double pnoise = std::max(total - psig - pdc, 0.0);

    SnrReport out;
    out.pSig = psig;
    out.pNoise = pnoise;
    out.tint = tint;
    out.periodsUsed = pUse;
    if (pnoise <= psig / ceiling || pnoise == 0.0) {
        out.snr = ceiling;
        out.capped = true;
    } else {
        out.snr = psig / pnoise;
        if (out.snr > ceiling) {
            out.snr = ceiling;
            out.capped = true;
        }
    }
    out.cmEquivalent = cm > 0.0 ? cm / out.snr : 0.0;
    return out;
}

ResolutionFit fit_resolution(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 4) throw std::invalid_argument("fit_resolution: need >= 4 points");
    double tMin = points.front().first, tMax = points.front().first;
    for (const auto& p : points) {
        tMin = std::min(tMin, p.first);
        tMax = std::max(tMax, p.first);
    }
    if (tMax / tMin < 99.0) {
        throw std::invalid_argument("fit_resolution: points must span >= 2 decades");
    }
    std::vector<double> lt, lc;
    for (const auto& p : points) {
        if (!(p.first > 0.0) || !(p.second > 0.0)) {
            throw std::invalid_argument("fit_resolution: nonpositive point");
        }
        lt.push_back(std::log(p.first));
        lc.push_back(std::log(p.second));
    }
    const LineFit free = linear_fit(lt, lc);
    ResolutionFit out;
    out.points = points;
    out.exponent = free.slope;
    out.nonWhiteFlag = free.slope < -0.65 || free.slope > -0.35;
    double acc = 0.0;
    for (std::size_t i = 0; i < lt.size(); ++i) acc += lc[i] + 0.5 * lt[i];
    out.a = std::exp(acc / static_cast<double>(lt.size()));
    out.sc = out.a / std::sqrt(0.250);
    return out;
}

double input_referred_noise(double phaseNoiseDensity, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("input_referred_noise: alpha must be > 0");
    return phaseNoiseDensity / alpha;
}

}  // namespace impedancemetry
