#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace impedancemetry {

// Behavioral model of the gyrator-based active inductor. The two
// transconductances emulate L = C_L / (gm1*gm2); loss cancellation through the
// C_R bank is modeled as a linear series resistance r_s(C_R) = r0 - alphaR*C_R,
// which may go negative (net gain, unstable tank).
struct GyratorModel {
    double gm1 = 0.0;     // S
    double gm2 = 0.0;     // S
    double r0 = 0.0;      // Ohm, series loss at C_R = 0
    double alphaR = 0.0;  // Ohm per farad of C_R
    double gLoad = 0.0;   // S, fixed parallel loss of the tank

    void validate() const;
};

// Binary-weighted switched-capacitor bank. total() = base + selected steps.
struct CapacitorBank {
    double base = 0.0;
    std::vector<double> steps;
    unsigned code = 0;

    unsigned codeCount() const { return 1u << steps.size(); }
    double total() const;          // uses the stored code
    double total(unsigned c) const;
};

struct TankConfig {
    GyratorModel gyrator;
    CapacitorBank clBank;
    CapacitorBank crBank;
    double cp = 0.0;      // fixed MOM capacitance, F
    double cpar = 0.0;    // parasitic parallel capacitance, F
    double dutCap = 0.0;  // attached device capacitance, F

    double totalCap() const { return cp + cpar + dutCap; }
    void validate() const;
};

// Q is reported from the impedance phase slope at the analytic resonance; the
// sign follows the net damping (negative for overcompensated loss). Lossless
// configurations are capped at |q| = 1e6 with qSaturated set.
struct TankResponse {
    double fr = 0.0;       // Hz
    double q = 0.0;        // signed
    double l = 0.0;        // H
    double rSeries = 0.0;  // Ohm, signed
    bool stable = true;
    bool qSaturated = false;
    // relative offset of the |Z| peak found numerically vs the analytic fr;
    // meaningful for stable configurations only
    double frPeakDeviation = 0.0;
};

inline constexpr double kQCap = 1e6;

double effective_inductance(const GyratorModel& g, double cL);
double series_resistance(const GyratorModel& g, double cR);

std::complex<double> tank_impedance(const TankConfig& cfg, double f);

TankResponse resonance(const TankConfig& cfg);

// Small-signal phase shift magnitude q*deltaC/cTot. The physical shift of the
// impedance phase at fixed probe frequency is negative for deltaC > 0.
double phase_shift_small_signal(double q, double deltaC, double cTot);

// One calibration target: at bank codes (clCode, crCode) the resonance should
// sit at fr with quality factor q.
struct CalibrationTarget {
    unsigned clCode = 0;
    unsigned crCode = 0;
    double fr = 0.0;
    double q = 0.0;
};

struct CalibrationFree {
    bool gmProduct = true;
    bool r0 = true;
    bool alphaR = true;
    bool gLoad = true;

    int count() const {
        return (gmProduct ? 1 : 0) + (r0 ? 1 : 0) + (alphaR ? 1 : 0) + (gLoad ? 1 : 0);
    }
};

struct CalibrationResult {
    GyratorModel model;
    std::vector<double> residuals;  // normalized: fr terms / 0.5%, q terms / 10%
    bool converged = false;
    int iterations = 0;
};

// Least-squares fit of the free gyrator parameters to the targets
// (Levenberg-Marquardt, finite-difference Jacobian). Converged means every
// fr target is met within 0.5% and every q target within 10%.
CalibrationResult calibrate_gyrator(const TankConfig& base,
                                    const std::vector<CalibrationTarget>& targets,
                                    const CalibrationFree& free);

}  // namespace impedancemetry
