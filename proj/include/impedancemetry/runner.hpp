#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "impedancemetry/analysis.hpp"
#include "impedancemetry/config.hpp"

namespace impedancemetry {

struct FitQualityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    std::string outDir = "out";
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    std::string format = "csv";  // csv | table
    bool writeFiles = true;
};

// ----- sweep ---------------------------------------------------------------

struct SweepRow {
    unsigned clCode = 0, crCode = 0;
    double clTotal = 0, crTotal = 0;
    double fr = 0, q = 0, l = 0, rSeries = 0;
    bool stable = true;
    double vin = 0;
    double frPeakDeviation = 0;
};

struct SweepResult {
    std::vector<SweepRow> summary;
    std::string summaryCsv;
    std::map<std::string, std::string> codeCsvs;  // filename -> body
};

SweepResult run_sweep(const ExperimentConfig& cfg, double fmin, double fmax, int points,
                      const RunOptions& opts);

// ----- sensitivity calibration ---------------------------------------------

struct AlphaPoint {
    unsigned crCode = 0;
    double qMeasured = 0;
    double alpha = 0;  // rad/F, detuning-linearized
    int probesUsed = 0;
};

struct CalibrateResult {
    std::vector<AlphaPoint> points;
    SensitivityFit fit;
    double cTotConfigured = 0;
    double recoveryError = 0;  // |recovered/configured - 1|
    // Monte-Carlo (noise on): recovered C_tot per seed and the median error
    std::vector<double> mcRecovered;
    double mcMedianError = 0;
    std::string alphaCsv;
    std::string mcCsv;
};

CalibrateResult run_calibrate(const ExperimentConfig& cfg, const RunOptions& opts, bool withNoise);

// ----- capacitance resolution ----------------------------------------------

struct ResolutionPoint {
    double tint = 0;
    double snr = 0;
    double cmEquivalent = 0;
};

struct IIaPoint {
    double tint2 = 0;
    double mean = 0;
    double std = 0;
    double cmEquivalent = 0;
};

struct LongHorizonPoint {
    double tint = 0;
    double cNoise = 0;     // measured capacitance noise, F
    double whitePred = 0;  // white-noise prediction, F
};

struct ResolutionResult {
    bool flicker = false;
    std::vector<ResolutionPoint> methodI;
    ResolutionFit fitI;
    double anchorSnr = 0;  // C_m = 2 fF, tint = 55 us, median over seeds
    std::vector<IIaPoint> methodIIa;
    ResolutionFit fitIIa;
    std::vector<LongHorizonPoint> longHorizon;
    std::string methodICsv;
    std::string methodIIaCsv;
    std::string longHorizonCsv;
    std::string fitCsv;
};

ResolutionResult run_resolution(const ExperimentConfig& cfg, const RunOptions& opts,
                                bool flickerOn);

// ----- quantum-capacitance spectroscopy ------------------------------------

struct QcapPeakTrack {
    int peakIndex = 0;
    std::vector<double> vbg;
    std::vector<double> center;
    double beta = 0;
    double r2 = 0;
};

struct QcapResult {
    std::vector<double> vbgValues;
    std::vector<double> vgsValues;
    // map[i][j] = dC/dV at (vbgValues[i], vgsValues[j])
    std::vector<std::vector<double>> map;
    std::vector<QcapPeakTrack> tracks;
    bool smearedFlag = false;
    double deltaV = 0;
    std::string mapCsv;
    std::string trackCsv;
    std::string cvCsv;
};

QcapResult run_qcap(const ExperimentConfig& cfg, const RunOptions& opts, double deltaV,
                    bool withNoise = false);

// ----- multiplexing / footprint planning -----------------------------------

struct PlanResult {
    int n = 10, m = 1;
    double reflectometryTotal = 0;
    double passiveTotal = 0;
    double activeTotal = 0;
    std::string reflectometryDominant;
    std::string passiveDominant;
    std::string activeDominant;
    double powerPerQubit = 0;
    double densityActiveOverPassive = 0;
    double densityActiveOverSuperconducting = 0;
    std::string densityNote;
    int hardBoundChannels = 0;
    int exampleSpacingChannels = 0;
    std::string footprintCsv;
    std::string allocationCsv;
    std::string textTable;
};

PlanResult run_plan(const ExperimentConfig& cfg, const RunOptions& opts, int n = 10, int m = 1);

// Debug trace export: (time, I, Q, amplitude, phase) CSV.
std::string trace_to_csv(const BasebandTrace& trace, std::size_t maxRows = 0);

}  // namespace impedancemetry
