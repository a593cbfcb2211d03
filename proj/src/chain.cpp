#include "impedancemetry/chain.hpp"

#include <cmath>
#include <stdexcept>

#include "impedancemetry/units.hpp"

namespace impedancemetry {

void CurrentSource::validate() const {
    if (!(gm > 0.0)) throw std::invalid_argument("current source: gm must be > 0");
    if (!(pole > 0.0)) throw std::invalid_argument("current source: pole must be > 0");
}

double BiasTee::corner() const { return 1.0 / (2.0 * kPi * rbt * cbt); }

void BiasTee::validate() const {
    const double fc = corner();
    if (!std::isfinite(fc) || !(fc > 0.0)) {
        throw std::invalid_argument("bias tee: corner frequency must be finite and > 0");
    }
}

void AmplifierStage::validate() const {
    if (!(pole > 0.0)) throw std::invalid_argument("amplifier: pole must be > 0");
}

void ChainConfig::validate() const {
    source.validate();
    biasTee.validate();
    amp.validate();
    follower.validate();
    tank.validate();
}

std::complex<double> source_current(const CurrentSource& cs, std::complex<double> vin, double f) {
    if (!(f > 0.0)) throw std::invalid_argument("source_current: f must be > 0");
    return cs.gm * vin / std::complex<double>(1.0, f / cs.pole);
}

std::complex<double> bias_tee_highpass(const BiasTee& bt, double f) {
    if (f < 0.0) throw std::invalid_argument("bias_tee_highpass: f must be >= 0");
    const double fc = bt.corner();
    const std::complex<double> jf(0.0, f / fc);
    return jf / (1.0 + jf);
}

namespace {

std::complex<double> single_pole(double gainDb, double pole, double f) {
    return db_to_linear(gainDb) / std::complex<double>(1.0, f / pole);
}

}  // namespace

std::complex<double> chain_stage_gain(const ChainConfig& cfg, double f) {
    return bias_tee_highpass(cfg.biasTee, f) * cfg.source.gm /
           std::complex<double>(1.0, f / cfg.source.pole) *
           single_pole(cfg.amp.gainDb, cfg.amp.pole, f) *
           single_pole(cfg.follower.gainDb, cfg.follower.pole, f);
}

ChainTransfer chain_transfer(const ChainConfig& cfg, double f) {
    if (!(f > 0.0)) throw std::invalid_argument("chain_transfer: f must be > 0");
    ChainTransfer out;
    out.h = chain_stage_gain(cfg, f) * tank_impedance(cfg.tank, f);
    out.tankStable = resonance(cfg.tank).stable;
    return out;
}

ChainTransfer chain_transfer_with_dut(const ChainConfig& cfg, double f, double dutCap) {
    ChainConfig c = cfg;
    c.tank.dutCap = dutCap;
    return chain_transfer(c, f);
}

double amplification_db(const ChainConfig& cfg, double f) {
    const double g = std::abs(single_pole(cfg.amp.gainDb, cfg.amp.pole, f)) *
                     std::abs(single_pole(cfg.follower.gainDb, cfg.follower.pole, f));
    return linear_to_db(g);
}

}  // namespace impedancemetry
