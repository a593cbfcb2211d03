#include "impedancemetry/dut.hpp"

#include <cmath>
#include <stdexcept>

namespace impedancemetry {

void QuantumPeak::validate() const {
    if (!(amplitude > 0.0)) throw std::invalid_argument("peak: amplitude must be > 0");
    if (!(width > 0.0)) throw std::invalid_argument("peak: width must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("peak: beta must be > 0");
}

void FetCvModel::validate() const {
    if (!(cInv > cSub) || !(cSub >= 0.0)) {
        throw std::invalid_argument("fet: need cInv > cSub >= 0");
    }
    if (!(transitionWidth > 0.0)) throw std::invalid_argument("fet: transitionWidth must be > 0");
    for (const auto& p : peaks) p.validate();
}

namespace {

double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double sech2(double x) {
    if (std::abs(x) > 350.0) return 0.0;
    const double c = std::cosh(x);
    return 1.0 / (c * c);
}

}  // namespace

double fet_cgg(const FetCvModel& m, double vgs, double vbg) {
    const double vthEff = m.vth - (vbg - m.vbgRef) * m.vthBackgateSlope;
    double c = m.cSub + (m.cInv - m.cSub) * logistic((vgs - vthEff) / m.transitionWidth);
    for (const auto& p : m.peaks) {
        const double pos = p.position - (vbg - m.vbgRef) / p.beta;
        c += p.amplitude * sech2((vgs - pos) / p.width);
    }
    return c;
}

double fet_dcgg_dv(const FetCvModel& m, double vgs, double vbg) {
    const double vthEff = m.vth - (vbg - m.vbgRef) * m.vthBackgateSlope;
    const double s = logistic((vgs - vthEff) / m.transitionWidth);
    double d = (m.cInv - m.cSub) * s * (1.0 - s) / m.transitionWidth;
    for (const auto& p : m.peaks) {
        const double pos = p.position - (vbg - m.vbgRef) / p.beta;
        const double u = (vgs - pos) / p.width;
        d += p.amplitude * (-2.0) * sech2(u) * std::tanh(u) / p.width;
    }
    return d;
}

DutSelection select_dut(const DutBank& bank, const std::string& id, double vbg) {
    DutSelection sel;
    sel.vgs = bank.vcm - bank.vbias;
    for (const auto& mom : bank.moms) {
        if (mom.name == id) {
            sel.dutCap = mom.value + bank.offStateParasitic;
            return sel;
        }
    }
    for (const auto& fet : bank.fets) {
        if (fet.name == id) {
            sel.isFet = true;
            sel.fet = &fet;
            sel.dutCap = fet_cgg(fet, sel.vgs, vbg) + bank.offStateParasitic;
            return sel;
        }
    }
    throw std::invalid_argument("select_dut: unknown device id '" + id + "'");
}

double deselected_capacitance(const DutBank& bank) { return bank.offStateParasitic; }

}  // namespace impedancemetry
