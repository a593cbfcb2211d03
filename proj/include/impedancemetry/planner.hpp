#pragma once

#include <string>
#include <vector>

namespace impedancemetry {

struct ArrayPlan {
    int n = 0;  // resonators (channels) per tile
    int m = 1;  // tile count
    double bandwidth = 0.0;   // Hz
    double spacing = 0.0;     // Hz
    double readoutTime = 0.0; // s
    std::vector<double> frequencies;  // offsets from the band start, Hz
};

// Uniform channel allocation in a band. spacing = max(bandwidth/n,
// 1/readoutTime); throws if n channels cannot be distinguished within the
// band at the requested readout time.
ArrayPlan allocate(double bandwidth, double readoutTime, int n, int m = 1);

// Hard channel-count bound for a band/readout-time pair.
int max_channels(double bandwidth, double readoutTime);

enum class ScalingLaw { mN2, mN, m };

struct ElementBudget {
    std::string name;
    double unitFootprint = 0.0;  // mm^2
    ScalingLaw scaling = ScalingLaw::m;
    double unitPower = -1.0;  // W; < 0 = not specified
};

double scaled_count(ScalingLaw law, int n, int m);

struct FootprintRow {
    std::string name;
    double unitFootprint = 0.0;
    double count = 0.0;
    double total = 0.0;  // mm^2
};

struct FootprintReport {
    std::vector<FootprintRow> rows;
    double total = 0.0;
    std::string dominant;
};

FootprintReport footprint_report(const std::vector<ElementBudget>& budgets, int n, int m);

double power_per_qubit(double resonatorPower, int n);

struct DensityReport {
    double active = 1.73e-3;           // H/mm^2
    double superconducting = 1.6e-6;   // H/mm^2
    double passive = 55e-9;            // H/mm^2
    double activeOverPassive = 0.0;
    double activeOverSuperconducting = 0.0;
    std::string note;
};

DensityReport inductance_density_comparison();

// Default budget tables for the three readout styles.
std::vector<ElementBudget> reflectometry_budget();
std::vector<ElementBudget> impedancemetry_passive_budget();
std::vector<ElementBudget> impedancemetry_active_budget();

}  // namespace impedancemetry
