#pragma once

#include <complex>

#include "impedancemetry/tank.hpp"

namespace impedancemetry {

struct CurrentSource {
    double gm = 0.0;    // S
    double pole = 0.0;  // Hz
    void validate() const;
};

struct BiasTee {
    double rbt = 0.0;  // Ohm
    double cbt = 0.0;  // F
    double corner() const;  // Hz
    void validate() const;
};

struct AmplifierStage {
    double gainDb = 0.0;
    double pole = 0.0;  // Hz
    void validate() const;
};

// Excitation and amplification path. All stages are single-pole; no
// compression is modeled. maxAmplitudeWarn flags (does not clip) outputs
// beyond the linear-regime reference.
struct ChainConfig {
    CurrentSource source;
    BiasTee biasTee;
    AmplifierStage amp;
    AmplifierStage follower;
    TankConfig tank;
    double maxAmplitudeWarn = 2e-3;  // V
    double voutTarget = 1.8e-3;      // V, reference level at resonance
    void validate() const;
};

std::complex<double> source_current(const CurrentSource& cs, std::complex<double> vin, double f);
std::complex<double> bias_tee_highpass(const BiasTee& bt, double f);

struct ChainTransfer {
    std::complex<double> h;
    bool tankStable = true;
};

// V_out / V_in at frequency f.
ChainTransfer chain_transfer(const ChainConfig& cfg, double f);
ChainTransfer chain_transfer_with_dut(const ChainConfig& cfg, double f, double dutCap);

// Product of every stage except the tank (bias tee, source pole, amplifier,
// follower), in units of volts out per (volt in * ohm of tank impedance).
// Used to de-embed the tank phase from chain measurements.
std::complex<double> chain_stage_gain(const ChainConfig& cfg, double f);

// Combined amplifier + follower gain in dB at frequency f.
double amplification_db(const ChainConfig& cfg, double f);

}  // namespace impedancemetry
