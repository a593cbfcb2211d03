#pragma once

#include <optional>
#include <string>
#include <vector>

namespace impedancemetry {

struct MomCap {
    std::string name;
    double value = 0.0;  // F
};

// Thermally broadened sech^2 line, position given at the reference back-gate
// voltage. Raising vbg by dV moves the peak down in vgs by dV/beta.
struct QuantumPeak {
    double position = 0.0;   // V
    double amplitude = 0.0;  // F
    double width = 0.0;      // V
    double beta = 0.0;       // front/back gate coupling ratio
    void validate() const;
};

// FET gate capacitance: logistic subthreshold-to-inversion transition plus
// quantum-capacitance peaks.
struct FetCvModel {
    std::string name;
    double cSub = 0.0;             // F
    double cInv = 0.0;             // F
    double vth = 0.0;              // V at vbgRef
    double transitionWidth = 0.0;  // V
    double vthBackgateSlope = 0.0;
    double vbgRef = 0.0;  // V
    std::vector<QuantumPeak> peaks;
    void validate() const;
};

struct DutBank {
    std::vector<MomCap> moms;
    std::vector<FetCvModel> fets;
    std::optional<std::string> selected;
    double vbias = 0.0;  // V
    double vcm = 0.0;    // V
    // unselected devices contribute a constant off-state parasitic
    double offStateParasitic = 0.0;  // F
};

double fet_cgg(const FetCvModel& m, double vgs, double vbg);
double fet_dcgg_dv(const FetCvModel& m, double vgs, double vbg);

struct DutSelection {
    double dutCap = 0.0;  // F contribution to the tank
    double vgs = 0.0;     // vcm - vbias, meaningful for FETs
    bool isFet = false;
    const FetCvModel* fet = nullptr;
};

// Resolves a device id against the bank. FET capacitance is evaluated at
// vgs = vcm - vbias and the given back-gate voltage.
DutSelection select_dut(const DutBank& bank, const std::string& id, double vbg);

// Capacitance of the bank with nothing selected.
double deselected_capacitance(const DutBank& bank);

}  // namespace impedancemetry
