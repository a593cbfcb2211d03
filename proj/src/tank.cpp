#include "impedancemetry/tank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "impedancemetry/fitmath.hpp"
#include "impedancemetry/units.hpp"

namespace impedancemetry {

void GyratorModel::validate() const {
    if (!(gm1 > 0.0) || !(gm2 > 0.0)) throw std::invalid_argument("gyrator: gm1, gm2 must be > 0");
    if (!(r0 >= 0.0)) throw std::invalid_argument("gyrator: r0 must be >= 0");
    if (!(alphaR >= 0.0)) throw std::invalid_argument("gyrator: alphaR must be >= 0");
    if (!(gLoad > 0.0)) throw std::invalid_argument("gyrator: gLoad must be > 0");
}

double CapacitorBank::total(unsigned c) const {
    if (c >= codeCount()) throw std::out_of_range("capacitor bank: code out of range");
    double sum = base;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (c & (1u << i)) sum += steps[i];
    }
    return sum;
}

double CapacitorBank::total() const { return total(code); }

void TankConfig::validate() const {
    gyrator.validate();
    if (!(cp > 0.0)) throw std::invalid_argument("tank: cp must be > 0");
    if (!(cpar >= 0.0)) throw std::invalid_argument("tank: cpar must be >= 0");
    if (!(dutCap >= 0.0)) throw std::invalid_argument("tank: dutCap must be >= 0");
    (void)clBank.total();
    (void)crBank.total();
}

double effective_inductance(const GyratorModel& g, double cL) {
    if (!std::isfinite(cL) || cL < 0.0) {
        throw std::invalid_argument("effective_inductance: cL must be finite and >= 0");
    }
    return cL / (g.gm1 * g.gm2);
}

double series_resistance(const GyratorModel& g, double cR) {
    if (!std::isfinite(cR) || cR < 0.0) {
        throw std::invalid_argument("series_resistance: cR must be finite and >= 0");
    }
    return g.r0 - g.alphaR * cR;
}

namespace {

// Tank admittance: series (L, r_s) branch in parallel with C_tot and gLoad.
std::complex<double> tank_admittance(double l, double rs, double cTot, double gLoad, double f) {
    const double w = 2.0 * kPi * f;
    const std::complex<double> branch(rs, w * l);
    return 1.0 / branch + std::complex<double>(gLoad, w * cTot);
}

}  // namespace

std::complex<double> tank_impedance(const TankConfig& cfg, double f) {
    if (f == 0.0) throw std::invalid_argument("tank_impedance: f must be nonzero");
    const double l = effective_inductance(cfg.gyrator, cfg.clBank.total());
    const double rs = series_resistance(cfg.gyrator, cfg.crBank.total());
    const std::complex<double> y = tank_admittance(l, rs, cfg.totalCap(), cfg.gyrator.gLoad, f);
    if (y == std::complex<double>(0.0, 0.0)) {
        throw std::runtime_error("tank_impedance: singular admittance (unstable configuration)");
    }
    return 1.0 / y;
}

TankResponse resonance(const TankConfig& cfg) {
    const double l = effective_inductance(cfg.gyrator, cfg.clBank.total());
    const double rs = series_resistance(cfg.gyrator, cfg.crBank.total());
    const double cTot = cfg.totalCap();
    const double gLoad = cfg.gyrator.gLoad;

    TankResponse out;
    out.l = l;
    out.rSeries = rs;
    out.fr = 1.0 / (2.0 * kPi * std::sqrt(l * cTot));

    const double wr = 2.0 * kPi * out.fr;
    const std::complex<double> branch(rs, wr * l);
    const std::complex<double> y = tank_admittance(l, rs, cTot, gLoad, out.fr);
    out.stable = y.real() >= 0.0;

    // q = -(fr/2) dphi/df of the impedance phase, evaluated exactly:
    // dphi/dw = -Im(Y'/Y), so q = pi*fr*Im(Y'/Y).
    const std::complex<double> dy =
        std::complex<double>(0.0, -l) / (branch * branch) + std::complex<double>(0.0, cTot);
    double q;
    if (std::abs(y) == 0.0) {
        q = std::numeric_limits<double>::infinity();
    } else {
        q = kPi * out.fr * (dy / y).imag();
    }
    if (!std::isfinite(q) || std::abs(q) > kQCap) {
        out.qSaturated = true;
        q = std::copysign(kQCap, out.stable ? 1.0 : -1.0);
    }
    out.q = q;

    // Self-check: numeric |Z| peak near the analytic resonance. Loss shifts the
    // peak slightly; the deviation is recorded, not corrected.
    if (out.stable && !out.qSaturated && std::abs(out.q) > 2.0) {
        const double halfWidth = out.fr / std::max(std::abs(out.q), 5.0);
        auto zmag = [&](double f) { return std::abs(tank_impedance(cfg, f)); };
        const double peak =
            golden_section_max(zmag, out.fr - 2.0 * halfWidth, out.fr + 2.0 * halfWidth, 1e-6);
        out.frPeakDeviation = (peak - out.fr) / out.fr;
    }
    return out;
}

double phase_shift_small_signal(double q, double deltaC, double cTot) {
    if (!(cTot > 0.0)) throw std::invalid_argument("phase_shift_small_signal: cTot must be > 0");
    return q * deltaC / cTot;
}

namespace {

struct ParamVector {
    // packed as log(gmProduct), r0, alphaR, log(gLoad) for the free entries
    std::vector<double> values;
};

GyratorModel apply_params(const GyratorModel& start, const CalibrationFree& free,
                          const std::vector<double>& p) {
    GyratorModel m = start;
    std::size_t i = 0;
    if (free.gmProduct) {
        const double prod = std::exp(p[i++]);
        const double gm = std::sqrt(prod);
        m.gm1 = gm;
        m.gm2 = gm;
    }
    if (free.r0) m.r0 = std::max(0.0, p[i++]);
    if (free.alphaR) m.alphaR = std::max(0.0, p[i++]);
    if (free.gLoad) m.gLoad = std::exp(p[i++]);
    return m;
}

std::vector<double> residuals_for(const TankConfig& base, const GyratorModel& model,
                                  const std::vector<CalibrationTarget>& targets) {
    std::vector<double> r;
    r.reserve(2 * targets.size());
    TankConfig cfg = base;
    cfg.gyrator = model;
    for (const auto& t : targets) {
        cfg.clBank.code = t.clCode;
        cfg.crBank.code = t.crCode;
        const TankResponse res = resonance(cfg);
        r.push_back((res.fr / t.fr - 1.0) / 0.005);
        // q <= 0 marks a frequency-only target
        if (t.q > 0.0) r.push_back((res.q / t.q - 1.0) / 0.10);
    }
    return r;
}

double sum_sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

CalibrationResult calibrate_gyrator(const TankConfig& base,
                                    const std::vector<CalibrationTarget>& targets,
                                    const CalibrationFree& free) {
    const int nFree = free.count();
    if (nFree == 0) throw std::invalid_argument("calibrate_gyrator: no free parameters");
    if (static_cast<int>(targets.size()) < nFree && static_cast<int>(targets.size()) * 2 < nFree) {
        throw std::invalid_argument("calibrate_gyrator: fewer targets than free parameters");
    }
    if (targets.empty()) throw std::invalid_argument("calibrate_gyrator: no targets");
    // Reject exact duplicates of (clCode, crCode) with conflicting targets up
    // front only when identical codes carry identical targets; conflicting
    // duplicates are legal input and surface as non-convergence.
    for (const auto& t : targets) {
        (void)base.clBank.total(t.clCode);
        (void)base.crBank.total(t.crCode);
        if (!(t.fr > 0.0)) {
            throw std::invalid_argument("calibrate_gyrator: targets need fr > 0");
        }
    }

    // Initial guess: gm product from the first fr target, r0 from its q.
    const double cTot = base.totalCap();
    GyratorModel start = base.gyrator;
    {
        const auto& t0 = targets.front();
        const double cl0 = base.clBank.total(t0.clCode);
        const double lTarget = 1.0 / ((2.0 * kPi * t0.fr) * (2.0 * kPi * t0.fr) * cTot);
        const double prod = cl0 / lTarget;
        const double gm = std::sqrt(prod);
        if (free.gmProduct) {
            start.gm1 = gm;
            start.gm2 = gm;
        }
        const double z0 = std::sqrt(lTarget / cTot);
        if (free.r0 && !(start.r0 > 0.0)) start.r0 = z0 / std::max(std::abs(t0.q), 1.0);
        if (free.alphaR && !(start.alphaR > 0.0)) {
            const double crMax = base.crBank.total(base.crBank.codeCount() - 1);
            start.alphaR = crMax > 0.0 ? 0.5 * start.r0 / crMax : 0.0;
        }
        if (free.gLoad && !(start.gLoad > 0.0)) start.gLoad = 1e-7;
    }
    if (!(start.gLoad > 0.0)) start.gLoad = 1e-7;

    std::vector<double> p;
    if (free.gmProduct) p.push_back(std::log(start.gm1 * start.gm2));
    if (free.r0) p.push_back(start.r0);
    if (free.alphaR) p.push_back(start.alphaR);
    if (free.gLoad) p.push_back(std::log(start.gLoad));

    const int n = static_cast<int>(p.size());
    double lambda = 1e-3;
    std::vector<double> r = residuals_for(base, apply_params(start, free, p), targets);
    double cost = sum_sq(r);

    CalibrationResult result;
    result.iterations = 0;
    for (int iter = 0; iter < 200; ++iter) {
        result.iterations = iter + 1;
        const int m = static_cast<int>(r.size());
        // finite-difference Jacobian
        std::vector<double> jac(static_cast<std::size_t>(m) * n);
        for (int j = 0; j < n; ++j) {
            std::vector<double> pj = p;
            const double h = 1e-6 * std::max(1.0, std::abs(p[j]));
            pj[j] += h;
            const auto rj = residuals_for(base, apply_params(start, free, pj), targets);
            for (int i = 0; i < m; ++i) jac[i * n + j] = (rj[i] - r[i]) / h;
        }
        // normal equations with LM damping
        std::vector<double> jtj(static_cast<std::size_t>(n) * n, 0.0), jtr(n, 0.0);
        for (int i = 0; i < m; ++i) {
            for (int a = 0; a < n; ++a) {
                jtr[a] += jac[i * n + a] * r[i];
                for (int b = 0; b < n; ++b) jtj[a * n + b] += jac[i * n + a] * jac[i * n + b];
            }
        }
        bool stepped = false;
        for (int attempt = 0; attempt < 16 && !stepped; ++attempt) {
            std::vector<double> aDamped = jtj;
            for (int d = 0; d < n; ++d) aDamped[d * n + d] += lambda * (1.0 + jtj[d * n + d]);
            std::vector<double> neg(jtr);
            for (auto& v : neg) v = -v;
            std::vector<double> step;
            try {
                step = solve_dense(aDamped, neg, n);
            } catch (const std::runtime_error&) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> pNew = p;
            for (int j = 0; j < n; ++j) pNew[j] += step[j];
            const auto rNew = residuals_for(base, apply_params(start, free, pNew), targets);
            const double costNew = sum_sq(rNew);
            if (costNew < cost) {
                p = pNew;
                r = rNew;
                cost = costNew;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped || cost < 1e-16) break;
    }

    result.model = apply_params(start, free, p);
    result.residuals = r;
    result.converged = true;
    for (double ri : r) {
        if (std::abs(ri) > 1.0) result.converged = false;
    }
    return result;
}

}  // namespace impedancemetry
