#include "impedancemetry/fitmath.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "impedancemetry/units.hpp"

namespace impedancemetry {

LineFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("linear_fit: need >= 2 points");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    LineFit out;
    out.slope = (n * sxy - sx * sy) / det;
    out.intercept = (sy - out.slope * sx) / n;
    double ssRes = 0, ssTot = 0;
    const double ym = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (out.slope * x[i] + out.intercept);
        ssRes += r * r;
        ssTot += (y[i] - ym) * (y[i] - ym);
    }
    out.r2 = ssTot > 0 ? 1.0 - ssRes / ssTot : 1.0;
    return out;
}

ZeroInterceptFit zero_intercept_fit(std::span<const double> x, std::span<const double> y,
                                    std::span<const double> weights) {
    if (x.size() != y.size() || x.empty()) {
        throw std::invalid_argument("zero_intercept_fit: need >= 1 point");
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sxy += w * x[i] * y[i];
        sxx += w * x[i] * x[i];
    }
    if (sxx == 0.0) throw std::invalid_argument("zero_intercept_fit: degenerate abscissae");
    ZeroInterceptFit out;
    out.slope = sxy / sxx;
    double ssRes = 0, ssTot = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - out.slope * x[i];
        ssRes += r * r;
        ssTot += y[i] * y[i];
        out.maxResidual = std::max(out.maxResidual, std::abs(r));
    }
    out.r2 = ssTot > 0 ? 1.0 - ssRes / ssTot : 1.0;
    return out;
}

std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        }
        if (a[pivot * n + col] == 0.0) throw std::runtime_error("solve_dense: singular matrix");
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] * inv;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
        x[r] = s / a[r * n + r];
    }
    return x;
}

double golden_section_max(const std::function<double(double)>& f, double a, double b,
                          double relTol) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while ((b - a) > relTol * (std::abs(a) + std::abs(b)) * 0.5) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

namespace {

double simpson_rule(const std::function<double(double)>& f, double a, double fa, double b,
                    double fb, double m, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_recurse(const std::function<double(double)>& f, double a, double fa, double b,
                       double fb, double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson_rule(f, a, fa, m, fm, lm, flm);
    const double right = simpson_rule(f, m, fm, b, fb, rm, frm);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return simpson_recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) +
           simpson_recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    return simpson_recurse(f, a, fa, b, fb, m, fm, simpson_rule(f, a, fa, b, fb, m, fm), tol, 40);
}

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& v : a) v /= static_cast<double>(n);
    }
}

// Bluestein's algorithm: arbitrary-length DFT through a power-of-2 convolution.
void fft_bluestein(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    std::size_t m = 1;
    while (m < 2 * n + 1) m <<= 1;
    std::vector<std::complex<double>> chirp(n);
    for (std::size_t i = 0; i < n; ++i) {
        // i^2 mod 2n keeps the chirp argument bounded
        const std::size_t i2 = (i * i) % (2 * n);
        const double ang = kPi * static_cast<double>(i2) / static_cast<double>(n) *
                           (inverse ? 1.0 : -1.0);
        chirp[i] = std::complex<double>(std::cos(ang), std::sin(ang));
    }
    std::vector<std::complex<double>> x(m, {0.0, 0.0}), y(m, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) x[i] = a[i] * chirp[i];
    y[0] = std::conj(chirp[0]);
    for (std::size_t i = 1; i < n; ++i) {
        y[i] = std::conj(chirp[i]);
        y[m - i] = std::conj(chirp[i]);
    }
    fft_pow2(x, false);
    fft_pow2(y, false);
    for (std::size_t i = 0; i < m; ++i) x[i] *= y[i];
    fft_pow2(x, true);
    for (std::size_t i = 0; i < n; ++i) a[i] = x[i] * chirp[i];
    if (inverse) {
        for (auto& v : a) v /= static_cast<double>(n);
    }
}

}  // namespace

void fft(std::vector<std::complex<double>>& data, bool inverse) {
    if (data.empty()) return;
    if (is_pow2(data.size())) {
        fft_pow2(data, inverse);
    } else {
        fft_bluestein(data, inverse);
    }
}

PsdEstimate welch_psd(std::span<const double> x, double fs, int segmentLength) {
    const std::size_t nseg = static_cast<std::size_t>(segmentLength);
    if (x.size() < nseg || nseg < 8) throw std::invalid_argument("welch_psd: trace too short");
    std::vector<double> window(nseg);
    double u = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                          static_cast<double>(nseg));
        u += window[i] * window[i];
    }
    PsdEstimate out;
    out.freq.resize(nseg / 2 + 1);
    out.psd.assign(nseg / 2 + 1, 0.0);
    for (std::size_t i = 0; i < out.freq.size(); ++i) {
        out.freq[i] = fs * static_cast<double>(i) / static_cast<double>(nseg);
    }
    const std::size_t step = nseg / 2;
    std::size_t count = 0;
    std::vector<std::complex<double>> buf(nseg);
    for (std::size_t start = 0; start + nseg <= x.size(); start += step) {
        double mean = 0.0;
        for (std::size_t i = 0; i < nseg; ++i) mean += x[start + i];
        mean /= static_cast<double>(nseg);
        for (std::size_t i = 0; i < nseg; ++i) {
            buf[i] = std::complex<double>((x[start + i] - mean) * window[i], 0.0);
        }
        fft(buf, false);
        for (std::size_t k = 0; k < out.psd.size(); ++k) {
            const double p = std::norm(buf[k]);
            // one-sided density; interior bins carry the mirrored power
            const double scale = (k == 0 || k == nseg / 2) ? 1.0 : 2.0;
            out.psd[k] += scale * p / (fs * u);
        }
        ++count;
    }
    for (auto& p : out.psd) p /= static_cast<double>(count);
    return out;
}

}  // namespace impedancemetry
