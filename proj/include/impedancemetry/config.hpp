#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "impedancemetry/chain.hpp"
#include "impedancemetry/dut.hpp"
#include "impedancemetry/signal.hpp"
#include "impedancemetry/tank.hpp"

namespace impedancemetry {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Experiment configuration file: INI-style sections, one `key = value` per
// line, `#` comments. Physical quantities must carry a unit suffix; unknown
// keys and dimension mismatches are rejected.
struct ExperimentConfig {
    GyratorModel gyrator;
    CapacitorBank clBank;
    CapacitorBank crBank;
    double cp = 0.0;
    double cpar = 0.0;

    CurrentSource source;
    BiasTee biasTee;
    AmplifierStage amp;
    AmplifierStage follower;
    double voutTarget = 1.8e-3;
    double maxAmplitudeWarn = 2e-3;

    std::vector<MomCap> momCaps;
    std::vector<FetCvModel> fets;
    double vcm = 0.0;
    double vbias = 0.0;

    // noise: either a direct phase-noise density or an input-referred
    // capacitance density resolved against the operating point sensitivity
    double whitePhase = 0.0;          // rad/rtHz; 0 when inputReferred is used
    double inputReferredNoise = 0.0;  // F/rtHz; 0 when whitePhase is used
    double flickerCorner = 0.0;       // Hz
    double noiseBandwidth = 0.0;      // Hz; 0 = auto
    std::uint64_t seed = 0;

    double f1 = 0.0;  // Hz; 0 = auto
    double f2 = 0.0;  // Hz
    double excitationAmplitude = 0.0;  // V; 0 = auto

    unsigned clCode = 0;
    unsigned crCode = 0;
    std::vector<unsigned> sensitivityCrCodes;
    int monteCarloSeeds = 32;
    double snrCeiling = 1e9;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical serialization in SI base units; parse(serialize(cfg)) is
// bit-identical to cfg.
std::string serialize_config(const ExperimentConfig& cfg);

// The calibrated default experiment shipped with the tool.
const std::string& default_config_text();
ExperimentConfig default_config();

// Builders wiring the configuration into module structs.
TankConfig make_tank(const ExperimentConfig& cfg, unsigned clCode, unsigned crCode,
                     double dutCap = 0.0);
ChainConfig make_chain(const ExperimentConfig& cfg, unsigned clCode, unsigned crCode,
                       double dutCap = 0.0);
DutBank make_dut_bank(const ExperimentConfig& cfg);

// Phase-noise density at the configured operating point; resolves
// input-referred noise through alpha = q/C_tot.
NoiseSpec make_noise(const ExperimentConfig& cfg, bool flickerOn = true);

}  // namespace impedancemetry
