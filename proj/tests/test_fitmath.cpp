#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "impedancemetry/fitmath.hpp"
#include "impedancemetry/rng.hpp"
#include "impedancemetry/units.hpp"

using namespace impedancemetry;

TEST_CASE("linear fit recovers slope and intercept") {
    std::vector<double> x, y;
    for (int i = 0; i < 20; ++i) {
        x.push_back(i);
        y.push_back(3.5 * i - 2.0);
    }
    const auto fit = linear_fit(x, y);
    CHECK(fit.slope == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0));
}

TEST_CASE("zero-intercept fit and weights") {
    std::vector<double> x = {1.0, 2.0, 4.0};
    std::vector<double> y = {2.0, 4.0, 8.0};
    CHECK(zero_intercept_fit(x, y).slope == doctest::Approx(2.0));
    std::vector<double> w = {1.0, 1.0, 0.0};
    std::vector<double> yOff = {2.0, 4.0, 100.0};
    CHECK(zero_intercept_fit(x, yOff, w).slope == doctest::Approx(2.0));
}

TEST_CASE("dense solver") {
    // 2x + y = 5; x - y = 1
    const auto x = solve_dense({2, 1, 1, -1}, {5, 1}, 2);
    CHECK(x[0] == doctest::Approx(2.0));
    CHECK(x[1] == doctest::Approx(1.0));
}

TEST_CASE("golden section finds a parabola maximum") {
    const double xm = golden_section_max([](double x) { return -(x - 3.7) * (x - 3.7); }, 0.0,
                                         10.0, 1e-9);
    CHECK(xm == doctest::Approx(3.7).epsilon(1e-6));
}

TEST_CASE("adaptive simpson integrates smooth functions") {
    const double v = adaptive_simpson([](double x) { return std::sin(x); }, 0.0, kPi, 1e-12);
    CHECK(v == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("fft matches a direct dft for non-power-of-two lengths") {
    for (std::size_t n : {8u, 12u, 100u, 800u}) {
        GaussianStream g(n);
        std::vector<std::complex<double>> a(n);
        for (auto& v : a) v = {g.normal(), g.normal()};
        auto b = a;
        fft(b, false);
        // direct DFT spot checks
        for (std::size_t k : {std::size_t{0}, n / 3, n - 1}) {
            std::complex<double> ref(0.0, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double ang =
                    -2.0 * kPi * static_cast<double>((i * k) % n) / static_cast<double>(n);
                ref += a[i] * std::complex<double>(std::cos(ang), std::sin(ang));
            }
            CHECK(std::abs(b[k] - ref) < 1e-9 * (1.0 + std::abs(ref)));
        }
        fft(b, true);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(b[i] - a[i]) < 1e-10);
    }
}

TEST_CASE("welch psd of white noise is flat at the configured density") {
    const double fs = 8192.0;
    const double density = 2.5e-3;  // units^2/Hz
    GaussianStream g(11);
    std::vector<double> x(1 << 16);
    const double sigma = std::sqrt(density * fs / 2.0);
    for (auto& v : x) v = sigma * g.normal();
    const auto est = welch_psd(x, fs, 1024);
    double acc = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < est.freq.size(); ++i) {
        if (est.freq[i] > fs / 64 && est.freq[i] < fs / 4) {
            acc += est.psd[i];
            ++count;
        }
    }
    CHECK(acc / count == doctest::Approx(density).epsilon(0.05));
}
