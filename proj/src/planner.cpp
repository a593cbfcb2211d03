#include "impedancemetry/planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace impedancemetry {

int max_channels(double bandwidth, double readoutTime) {
    return static_cast<int>(std::floor(bandwidth * readoutTime + 1e-9));
}

ArrayPlan allocate(double bandwidth, double readoutTime, int n, int m) {
    if (n < 1) throw std::invalid_argument("allocate: n must be >= 1");
    if (m < 1) throw std::invalid_argument("allocate: m must be >= 1");
    if (!(bandwidth > 0.0) || !(readoutTime > 0.0)) {
        throw std::invalid_argument("allocate: bandwidth and readoutTime must be > 0");
    }
    if (static_cast<double>(n) / readoutTime > bandwidth * (1.0 + 1e-12)) {
        throw std::runtime_error("allocate: infeasible, n/readoutTime exceeds the bandwidth");
    }
    ArrayPlan plan;
    plan.n = n;
    plan.m = m;
    plan.bandwidth = bandwidth;
    plan.readoutTime = readoutTime;
    plan.spacing = std::max(bandwidth / n, 1.0 / readoutTime);
    const double start = (bandwidth - static_cast<double>(n - 1) * plan.spacing) / 2.0;
    plan.frequencies.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        plan.frequencies[static_cast<std::size_t>(i)] = start + i * plan.spacing;
    }
    return plan;
}

double scaled_count(ScalingLaw law, int n, int m) {
    switch (law) {
        case ScalingLaw::mN2:
            return static_cast<double>(m) * n * n;
        case ScalingLaw::mN:
            return static_cast<double>(m) * n;
        case ScalingLaw::m:
            return static_cast<double>(m);
    }
    return 0.0;
}

FootprintReport footprint_report(const std::vector<ElementBudget>& budgets, int n, int m) {
    if (budgets.empty()) throw std::invalid_argument("footprint_report: empty budget table");
    if (m < 1) throw std::runtime_error("footprint_report: empty table (m < 1)");
    FootprintReport report;
    double best = -1.0;
    for (const auto& b : budgets) {
        FootprintRow row;
        row.name = b.name;
        row.unitFootprint = b.unitFootprint;
        row.count = scaled_count(b.scaling, n, m);
        row.total = b.unitFootprint * row.count;
        report.total += row.total;
        if (row.total > best) {
            best = row.total;
            report.dominant = row.name;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

double power_per_qubit(double resonatorPower, int n) {
    if (n < 1) throw std::invalid_argument("power_per_qubit: n must be >= 1");
    // one resonator serves a row of n qubits: power*n over n^2 qubits
    return resonatorPower / n;
}

DensityReport inductance_density_comparison() {
    DensityReport r;
    r.activeOverPassive = r.active / r.passive;
    r.activeOverSuperconducting = r.active / r.superconducting;
    r.note =
        "active/passive ratio is 3.1e4 (4.5 orders of magnitude), short of the often-quoted "
        "five orders; active/superconducting is 1.1e3 (three orders)";
    return r;
}

std::vector<ElementBudget> reflectometry_budget() {
    return {
        {"qubits", 1e-8, ScalingLaw::mN2, -1.0},
        {"amplifiers", 0.1, ScalingLaw::m, -1.0},
        {"inductors", 1.0, ScalingLaw::mN, -1.0},
        {"couplers", 100.0, ScalingLaw::m, -1.0},
    };
}

std::vector<ElementBudget> impedancemetry_passive_budget() {
    return {
        {"qubits", 1e-8, ScalingLaw::mN2, -1.0},
        {"sources", 1e-3, ScalingLaw::mN, -1.0},
        {"followers", 1e-3, ScalingLaw::mN, -1.0},
        {"amplifiers", 0.1, ScalingLaw::m, -1.0},
        {"inductors", 1.0, ScalingLaw::mN, 85e-6},
    };
}

std::vector<ElementBudget> impedancemetry_active_budget() {
    auto v = impedancemetry_passive_budget();
    for (auto& b : v) {
        if (b.name == "inductors") b.unitFootprint = 0.001;
    }
    return v;
}

}  // namespace impedancemetry
