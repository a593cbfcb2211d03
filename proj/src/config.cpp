#include "impedancemetry/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "impedancemetry/units.hpp"

namespace impedancemetry {

namespace {

enum class Dim {
    unitless,
    farad,
    hertz,
    volt,
    siemens,
    ohm,
    ohmPerFarad,
    decibel,
    second,
    watt,
    phaseNoise,  // rad/rtHz
    capNoise,    // F/rtHz
};

struct UnitDef {
    Dim dim;
    double mult;
};

const std::map<std::string, UnitDef>& unit_table() {
    static const std::map<std::string, UnitDef> table = {
        {"F", {Dim::farad, 1.0}},
        {"pF", {Dim::farad, 1e-12}},
        {"fF", {Dim::farad, 1e-15}},
        {"aF", {Dim::farad, 1e-18}},
        {"Hz", {Dim::hertz, 1.0}},
        {"kHz", {Dim::hertz, 1e3}},
        {"MHz", {Dim::hertz, 1e6}},
        {"GHz", {Dim::hertz, 1e9}},
        {"V", {Dim::volt, 1.0}},
        {"mV", {Dim::volt, 1e-3}},
        {"uV", {Dim::volt, 1e-6}},
        {"S", {Dim::siemens, 1.0}},
        {"mS", {Dim::siemens, 1e-3}},
        {"uS", {Dim::siemens, 1e-6}},
        {"nS", {Dim::siemens, 1e-9}},
        {"nA/mV", {Dim::siemens, 1e-6}},
        {"Ohm", {Dim::ohm, 1.0}},
        {"kOhm", {Dim::ohm, 1e3}},
        {"MOhm", {Dim::ohm, 1e6}},
        {"Ohm/F", {Dim::ohmPerFarad, 1.0}},
        {"Ohm/fF", {Dim::ohmPerFarad, 1e15}},
        {"dB", {Dim::decibel, 1.0}},
        {"s", {Dim::second, 1.0}},
        {"ms", {Dim::second, 1e-3}},
        {"us", {Dim::second, 1e-6}},
        {"ns", {Dim::second, 1e-9}},
        {"W", {Dim::watt, 1.0}},
        {"mW", {Dim::watt, 1e-3}},
        {"uW", {Dim::watt, 1e-6}},
        {"rad/rtHz", {Dim::phaseNoise, 1.0}},
        {"mrad/rtHz", {Dim::phaseNoise, 1e-3}},
        {"deg/rtHz", {Dim::phaseNoise, kPi / 180.0}},
        {"mdeg/rtHz", {Dim::phaseNoise, kPi / 180.0 * 1e-3}},
        {"F/rtHz", {Dim::capNoise, 1.0}},
        {"fF/rtHz", {Dim::capNoise, 1e-15}},
        {"aF/rtHz", {Dim::capNoise, 1e-18}},
    };
    return table;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct RawEntry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
};

struct RawConfig {
    std::map<std::string, RawEntry> entries;  // "section.key" -> value
};

RawConfig tokenize(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(lineNo) + ": bad section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ConfigError("config line " + std::to_string(lineNo) + ": empty section name");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineNo) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("config line " + std::to_string(lineNo) + ": empty key or value");
        }
        if (section.empty()) {
            throw ConfigError("config line " + std::to_string(lineNo) + ": key outside a section");
        }
        const std::string full = section + "." + key;
        if (!raw.entries.emplace(full, RawEntry{value, lineNo, false}).second) {
            throw ConfigError("config: duplicate key '" + full + "'");
        }
    }
    return raw;
}

double parse_quantity(const std::string& text, Dim dim, const std::string& key) {
    std::istringstream in(text);
    double value = 0.0;
    if (!(in >> value)) throw ConfigError("config key '" + key + "': cannot parse a number");
    std::string unit;
    in >> unit;
    std::string rest;
    if (in >> rest) throw ConfigError("config key '" + key + "': trailing text after the unit");
    if (dim == Dim::unitless) {
        if (!unit.empty()) {
            throw ConfigError("config key '" + key + "': unexpected unit on a unitless value");
        }
        return value;
    }
    if (unit.empty()) {
        throw ConfigError("config key '" + key + "': physical quantity requires a unit");
    }
    const auto it = unit_table().find(unit);
    if (it == unit_table().end()) {
        throw ConfigError("config key '" + key + "': unknown unit '" + unit + "'");
    }
    if (it->second.dim != dim) {
        throw ConfigError("config key '" + key + "': unit '" + unit + "' has the wrong dimension");
    }
    return value * it->second.mult;
}

class Reader {
  public:
    explicit Reader(const RawConfig& raw) : raw_(raw) {}

    std::optional<std::string> find(const std::string& full) const {
        const auto it = raw_.entries.find(full);
        if (it == raw_.entries.end()) return std::nullopt;
        it->second.consumed = true;
        return it->second.value;
    }

    double require(const std::string& full, Dim dim) const {
        const auto v = find(full);
        if (!v) throw ConfigError("config: missing key '" + full + "'");
        return parse_quantity(*v, dim, full);
    }

    double optional(const std::string& full, Dim dim, double fallback) const {
        const auto v = find(full);
        if (!v) return fallback;
        return parse_quantity(*v, dim, full);
    }

    std::string require_string(const std::string& full) const {
        const auto v = find(full);
        if (!v) throw ConfigError("config: missing key '" + full + "'");
        return *v;
    }

    std::vector<double> require_list(const std::string& full, Dim dim) const {
        const auto v = find(full);
        if (!v) throw ConfigError("config: missing key '" + full + "'");
        std::vector<double> out;
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) throw ConfigError("config key '" + full + "': empty list item");
            out.push_back(parse_quantity(item, dim, full));
        }
        if (out.empty()) throw ConfigError("config key '" + full + "': empty list");
        return out;
    }

    bool has_section(const std::string& section) const {
        const std::string prefix = section + ".";
        for (const auto& [k, v] : raw_.entries) {
            if (k.rfind(prefix, 0) == 0) return true;
        }
        return false;
    }

    void reject_unconsumed() const {
        for (const auto& [k, v] : raw_.entries) {
            if (!v.consumed) {
                throw ConfigError("config: unknown key '" + k + "' (line " +
                                  std::to_string(v.line) + ")");
            }
        }
    }

  private:
    const RawConfig& raw_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    const RawConfig raw = tokenize(text);
    const Reader r(raw);
    ExperimentConfig cfg;

    cfg.gyrator.gm1 = r.require("gyrator.gm1", Dim::siemens);
    cfg.gyrator.gm2 = r.require("gyrator.gm2", Dim::siemens);
    cfg.gyrator.r0 = r.require("gyrator.r0", Dim::ohm);
    cfg.gyrator.alphaR = r.require("gyrator.alpha_r", Dim::ohmPerFarad);
    cfg.gyrator.gLoad = r.require("gyrator.g_load", Dim::siemens);

    cfg.clBank.base = r.require("bank.cl.base", Dim::farad);
    cfg.clBank.steps = r.require_list("bank.cl.steps", Dim::farad);
    cfg.crBank.base = r.require("bank.cr.base", Dim::farad);
    cfg.crBank.steps = r.require_list("bank.cr.steps", Dim::farad);

    cfg.cp = r.require("tank.cp", Dim::farad);
    cfg.cpar = r.require("tank.cpar", Dim::farad);

    cfg.source.gm = r.require("chain.source_gm", Dim::siemens);
    cfg.source.pole = r.require("chain.source_pole", Dim::hertz);
    cfg.biasTee.rbt = r.require("chain.bias_tee_r", Dim::ohm);
    cfg.biasTee.cbt = r.require("chain.bias_tee_c", Dim::farad);
    cfg.amp.gainDb = r.require("chain.amp_gain", Dim::decibel);
    cfg.amp.pole = r.require("chain.amp_pole", Dim::hertz);
    cfg.follower.gainDb = r.require("chain.follower_gain", Dim::decibel);
    cfg.follower.pole = r.require("chain.follower_pole", Dim::hertz);
    cfg.voutTarget = r.optional("chain.vout_target", Dim::volt, 1.8e-3);
    cfg.maxAmplitudeWarn = r.optional("chain.max_amplitude_warn", Dim::volt, 2e-3);

    const auto momValues = r.require_list("dut.mom_caps", Dim::farad);
    for (std::size_t i = 0; i < momValues.size(); ++i) {
        cfg.momCaps.push_back({"mom" + std::to_string(i), momValues[i]});
    }
    cfg.vcm = r.require("dut.vcm", Dim::volt);
    cfg.vbias = r.require("dut.vbias", Dim::volt);

    for (int fi = 0;; ++fi) {
        const std::string sec = "dut.fet" + std::to_string(fi);
        if (!r.has_section(sec)) break;
        FetCvModel fet;
        fet.name = r.require_string(sec + ".name");
        fet.cSub = r.require(sec + ".c_sub", Dim::farad);
        fet.cInv = r.require(sec + ".c_inv", Dim::farad);
        fet.vth = r.require(sec + ".vth", Dim::volt);
        fet.transitionWidth = r.require(sec + ".transition_width", Dim::volt);
        fet.vthBackgateSlope = r.require(sec + ".vth_backgate_slope", Dim::unitless);
        fet.vbgRef = r.require(sec + ".vbg_ref", Dim::volt);
        for (int pi = 0;; ++pi) {
            const std::string psec = sec + ".peak" + std::to_string(pi);
            if (!r.has_section(psec)) break;
            QuantumPeak p;
            p.position = r.require(psec + ".position", Dim::volt);
            p.amplitude = r.require(psec + ".amplitude", Dim::farad);
            p.width = r.require(psec + ".width", Dim::volt);
            p.beta = r.require(psec + ".beta", Dim::unitless);
            fet.peaks.push_back(p);
        }
        fet.validate();
        cfg.fets.push_back(std::move(fet));
    }

    cfg.whitePhase = r.optional("noise.white_phase", Dim::phaseNoise, 0.0);
    cfg.inputReferredNoise = r.optional("noise.input_referred", Dim::capNoise, 0.0);
    if (cfg.whitePhase > 0.0 && cfg.inputReferredNoise > 0.0) {
        throw ConfigError("config: specify noise.white_phase or noise.input_referred, not both");
    }
    cfg.flickerCorner = r.require("noise.flicker_corner", Dim::hertz);
    cfg.noiseBandwidth = r.optional("noise.bandwidth", Dim::hertz, 0.0);
    const double seed = r.require("noise.seed", Dim::unitless);
    if (seed < 0.0 || seed != std::floor(seed)) {
        throw ConfigError("config: noise.seed must be a non-negative integer");
    }
    cfg.seed = static_cast<std::uint64_t>(seed);

    cfg.f1 = r.optional("excitation.f1", Dim::hertz, 0.0);
    cfg.f2 = r.require("excitation.f2", Dim::hertz);
    cfg.excitationAmplitude = r.optional("excitation.amplitude", Dim::volt, 0.0);

    const double clCode = r.require("experiment.cl_code", Dim::unitless);
    const double crCode = r.require("experiment.cr_code", Dim::unitless);
    cfg.clCode = static_cast<unsigned>(clCode);
    cfg.crCode = static_cast<unsigned>(crCode);
    {
        const auto codes = r.require_list("experiment.sensitivity_cr_codes", Dim::unitless);
        for (double c : codes) cfg.sensitivityCrCodes.push_back(static_cast<unsigned>(c));
    }
    cfg.monteCarloSeeds =
        static_cast<int>(r.optional("experiment.monte_carlo_seeds", Dim::unitless, 32));
    cfg.snrCeiling = r.optional("experiment.snr_ceiling", Dim::unitless, 1e9);

    r.reject_unconsumed();

    cfg.gyrator.validate();
    if (cfg.clCode >= cfg.clBank.codeCount() || cfg.crCode >= cfg.crBank.codeCount()) {
        throw ConfigError("config: experiment bank code out of range");
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream o;
    o << "[gyrator]\n";
    o << "gm1 = " << num(cfg.gyrator.gm1) << " S\n";
    o << "gm2 = " << num(cfg.gyrator.gm2) << " S\n";
    o << "r0 = " << num(cfg.gyrator.r0) << " Ohm\n";
    o << "alpha_r = " << num(cfg.gyrator.alphaR) << " Ohm/F\n";
    o << "g_load = " << num(cfg.gyrator.gLoad) << " S\n\n";

    auto bank = [&](const char* name, const CapacitorBank& b) {
        o << "[bank." << name << "]\n";
        o << "base = " << num(b.base) << " F\n";
        o << "steps = ";
        for (std::size_t i = 0; i < b.steps.size(); ++i) {
            if (i) o << ", ";
            o << num(b.steps[i]) << " F";
        }
        o << "\n\n";
    };
    bank("cl", cfg.clBank);
    bank("cr", cfg.crBank);

    o << "[tank]\n";
    o << "cp = " << num(cfg.cp) << " F\n";
    o << "cpar = " << num(cfg.cpar) << " F\n\n";

    o << "[chain]\n";
    o << "source_gm = " << num(cfg.source.gm) << " S\n";
    o << "source_pole = " << num(cfg.source.pole) << " Hz\n";
    o << "bias_tee_r = " << num(cfg.biasTee.rbt) << " Ohm\n";
    o << "bias_tee_c = " << num(cfg.biasTee.cbt) << " F\n";
    o << "amp_gain = " << num(cfg.amp.gainDb) << " dB\n";
    o << "amp_pole = " << num(cfg.amp.pole) << " Hz\n";
    o << "follower_gain = " << num(cfg.follower.gainDb) << " dB\n";
    o << "follower_pole = " << num(cfg.follower.pole) << " Hz\n";
    o << "vout_target = " << num(cfg.voutTarget) << " V\n";
    o << "max_amplitude_warn = " << num(cfg.maxAmplitudeWarn) << " V\n\n";

    o << "[dut]\n";
    o << "mom_caps = ";
    for (std::size_t i = 0; i < cfg.momCaps.size(); ++i) {
        if (i) o << ", ";
        o << num(cfg.momCaps[i].value) << " F";
    }
    o << "\n";
    o << "vcm = " << num(cfg.vcm) << " V\n";
    o << "vbias = " << num(cfg.vbias) << " V\n\n";

    for (std::size_t fi = 0; fi < cfg.fets.size(); ++fi) {
        const auto& f = cfg.fets[fi];
        o << "[dut.fet" << fi << "]\n";
        o << "name = " << f.name << "\n";
        o << "c_sub = " << num(f.cSub) << " F\n";
        o << "c_inv = " << num(f.cInv) << " F\n";
        o << "vth = " << num(f.vth) << " V\n";
        o << "transition_width = " << num(f.transitionWidth) << " V\n";
        o << "vth_backgate_slope = " << num(f.vthBackgateSlope) << "\n";
        o << "vbg_ref = " << num(f.vbgRef) << " V\n\n";
        for (std::size_t pi = 0; pi < f.peaks.size(); ++pi) {
            const auto& p = f.peaks[pi];
            o << "[dut.fet" << fi << ".peak" << pi << "]\n";
            o << "position = " << num(p.position) << " V\n";
            o << "amplitude = " << num(p.amplitude) << " F\n";
            o << "width = " << num(p.width) << " V\n";
            o << "beta = " << num(p.beta) << "\n\n";
        }
    }

    o << "[noise]\n";
    if (cfg.whitePhase > 0.0) {
        o << "white_phase = " << num(cfg.whitePhase) << " rad/rtHz\n";
    } else {
        o << "input_referred = " << num(cfg.inputReferredNoise) << " F/rtHz\n";
    }
    o << "flicker_corner = " << num(cfg.flickerCorner) << " Hz\n";
    o << "bandwidth = " << num(cfg.noiseBandwidth) << " Hz\n";
    o << "seed = " << cfg.seed << "\n\n";

    o << "[excitation]\n";
    o << "f1 = " << num(cfg.f1) << " Hz\n";
    o << "f2 = " << num(cfg.f2) << " Hz\n";
    o << "amplitude = " << num(cfg.excitationAmplitude) << " V\n\n";

    o << "[experiment]\n";
    o << "cl_code = " << cfg.clCode << "\n";
    o << "cr_code = " << cfg.crCode << "\n";
    o << "sensitivity_cr_codes = ";
    for (std::size_t i = 0; i < cfg.sensitivityCrCodes.size(); ++i) {
        if (i) o << ", ";
        o << cfg.sensitivityCrCodes[i];
    }
    o << "\n";
    o << "monte_carlo_seeds = " << cfg.monteCarloSeeds << "\n";
    o << "snr_ceiling = " << num(cfg.snrCeiling) << "\n";
    return o.str();
}

const std::string& default_config_text() {
    // Gyrator numbers come from calibrating the resonance endpoints
    // (199.0 MHz at C_L code 0, 189.1 MHz at code 3 with C_tot = 137 fF) and
    // the quality-factor range (80 at minimum tuning, 250 at full C_R). The
    // C_L bank base includes the cryogenic parasitics of the gyrator node on
    // top of the 362 fF MOM capacitor.
    static const std::string text = R"(# default impedancemetry experiment
[gyrator]
gm1 = 637.6866 uS
gm2 = 637.6866 uS
r0 = 67.3571 Ohm
alpha_r = 0.1522502 Ohm/fF
g_load = 0.25 uS

[bank.cl]
base = 1898.577 fF
steps = 68 fF, 136 fF

[bank.cr]
base = 0 fF
steps = 23 fF, 46 fF, 92 fF, 184 fF

[tank]
cp = 136 fF
cpar = 1 fF

[chain]
source_gm = 3.4 nA/mV
source_pole = 3.5 GHz
bias_tee_r = 10 MOhm
bias_tee_c = 406 fF
amp_gain = 15 dB
amp_pole = 1.8 GHz
follower_gain = 0 dB
follower_pole = 92 MHz
vout_target = 1.8 mV
max_amplitude_warn = 2 mV

[dut]
mom_caps = 2 fF, 4 fF, 8 fF
vcm = 0.48 V
vbias = 0.48 V

[dut.fet0]
name = m2
c_sub = 50 aF
c_inv = 300 aF
vth = 0 V
transition_width = 30 mV
vth_backgate_slope = 0.1
vbg_ref = 6 V

[dut.fet0.peak0]
position = -30 mV
amplitude = 40 aF
width = 10 mV
beta = 10

[dut.fet0.peak1]
position = 0 mV
amplitude = 40 aF
width = 10 mV
beta = 10

[dut.fet0.peak2]
position = 30 mV
amplitude = 40 aF
width = 10 mV
beta = 8.6

[noise]
input_referred = 3.7 aF/rtHz
flicker_corner = 300 Hz
bandwidth = 0 Hz
seed = 42

[excitation]
f1 = 0 Hz
f2 = 1 kHz
amplitude = 0 V

[experiment]
cl_code = 0
cr_code = 0
sensitivity_cr_codes = 0, 5, 10, 15
monte_carlo_seeds = 32
snr_ceiling = 1e9
)";
    return text;
}

ExperimentConfig default_config() { return parse_config(default_config_text()); }

TankConfig make_tank(const ExperimentConfig& cfg, unsigned clCode, unsigned crCode,
                     double dutCap) {
    TankConfig tank;
    tank.gyrator = cfg.gyrator;
    tank.clBank = cfg.clBank;
    tank.crBank = cfg.crBank;
    tank.clBank.code = clCode;
    tank.crBank.code = crCode;
    tank.cp = cfg.cp;
    tank.cpar = cfg.cpar;
    tank.dutCap = dutCap;
    tank.validate();
    return tank;
}

ChainConfig make_chain(const ExperimentConfig& cfg, unsigned clCode, unsigned crCode,
                       double dutCap) {
    ChainConfig chain;
    chain.source = cfg.source;
    chain.biasTee = cfg.biasTee;
    chain.amp = cfg.amp;
    chain.follower = cfg.follower;
    chain.tank = make_tank(cfg, clCode, crCode, dutCap);
    chain.maxAmplitudeWarn = cfg.maxAmplitudeWarn;
    chain.voutTarget = cfg.voutTarget;
    chain.validate();
    return chain;
}

DutBank make_dut_bank(const ExperimentConfig& cfg) {
    DutBank bank;
    bank.moms = cfg.momCaps;
    bank.fets = cfg.fets;
    bank.vcm = cfg.vcm;
    bank.vbias = cfg.vbias;
    return bank;
}

NoiseSpec make_noise(const ExperimentConfig& cfg, bool flickerOn) {
    NoiseSpec spec;
    spec.seed = cfg.seed;
    spec.flickerCorner = flickerOn ? cfg.flickerCorner : 0.0;
    spec.bandwidth = cfg.noiseBandwidth;
    if (cfg.whitePhase > 0.0) {
        spec.whitePhase = cfg.whitePhase;
    } else if (cfg.inputReferredNoise > 0.0) {
        const TankConfig tank = make_tank(cfg, cfg.clCode, cfg.crCode);
        const TankResponse res = resonance(tank);
        const double alpha = std::abs(res.q) / tank.totalCap();
        spec.whitePhase = cfg.inputReferredNoise * alpha;
    }
    return spec;
}

}  // namespace impedancemetry
