#include <doctest.h>

#include "impedancemetry/config.hpp"

using namespace impedancemetry;

TEST_CASE("default configuration parses and validates") {
    const auto cfg = default_config();
    CHECK(cfg.cp == doctest::Approx(136e-15));
    CHECK(cfg.cpar == doctest::Approx(1e-15));
    CHECK(cfg.clBank.steps.size() == 2);
    CHECK(cfg.crBank.steps.size() == 4);
    CHECK(cfg.momCaps.size() == 3);
    CHECK(cfg.momCaps[0].value == doctest::Approx(2e-15));
    CHECK(cfg.fets.size() == 1);
    CHECK(cfg.fets[0].peaks.size() == 3);
    CHECK(cfg.fets[0].peaks[2].beta == doctest::Approx(8.6));
    CHECK(cfg.inputReferredNoise == doctest::Approx(3.7e-18));
    CHECK(cfg.flickerCorner == doctest::Approx(300.0));
    CHECK(cfg.seed == 42);
    CHECK(cfg.f2 == doctest::Approx(1e3));
    CHECK(cfg.sensitivityCrCodes.size() == 4);
    // the source gm arrives through the nA/mV alias
    CHECK(cfg.source.gm == doctest::Approx(3.4e-6));
}

TEST_CASE("round trip: parse, serialize, parse is identical") {
    const auto a = parse_config(default_config_text());
    const auto b = parse_config(serialize_config(a));
    CHECK(a.gyrator.gm1 == b.gyrator.gm1);
    CHECK(a.gyrator.alphaR == b.gyrator.alphaR);
    CHECK(a.clBank.base == b.clBank.base);
    CHECK(a.clBank.steps == b.clBank.steps);
    CHECK(a.crBank.steps == b.crBank.steps);
    CHECK(a.cp == b.cp);
    CHECK(a.source.gm == b.source.gm);
    CHECK(a.biasTee.rbt == b.biasTee.rbt);
    CHECK(a.amp.gainDb == b.amp.gainDb);
    CHECK(a.momCaps.size() == b.momCaps.size());
    for (std::size_t i = 0; i < a.momCaps.size(); ++i) {
        CHECK(a.momCaps[i].value == b.momCaps[i].value);
    }
    REQUIRE(a.fets.size() == b.fets.size());
    for (std::size_t i = 0; i < a.fets.size(); ++i) {
        CHECK(a.fets[i].cSub == b.fets[i].cSub);
        CHECK(a.fets[i].peaks.size() == b.fets[i].peaks.size());
        for (std::size_t j = 0; j < a.fets[i].peaks.size(); ++j) {
            CHECK(a.fets[i].peaks[j].beta == b.fets[i].peaks[j].beta);
            CHECK(a.fets[i].peaks[j].position == b.fets[i].peaks[j].position);
        }
    }
    CHECK(a.inputReferredNoise == b.inputReferredNoise);
    CHECK(a.flickerCorner == b.flickerCorner);
    CHECK(a.seed == b.seed);
    CHECK(a.f2 == b.f2);
    CHECK(a.clCode == b.clCode);
    CHECK(a.sensitivityCrCodes == b.sensitivityCrCodes);
    CHECK(a.snrCeiling == b.snrCeiling);
    // serialization is canonical: serializing both gives the same text
    CHECK(serialize_config(a) == serialize_config(b));
}

TEST_CASE("unknown keys are rejected") {
    std::string text = default_config_text();
    text += "\n[gyrator]\nbogus_knob = 3\n";
    CHECK_THROWS_AS(parse_config(text), ConfigError);
}

TEST_CASE("duplicate keys are rejected") {
    std::string text = default_config_text();
    text += "\n[tank]\ncp = 10 fF\n";
    CHECK_THROWS_AS(parse_config(text), ConfigError);
}

TEST_CASE("unitless physical quantities are rejected") {
    std::string text = default_config_text();
    const auto pos = text.find("cp = 136 fF");
    REQUIRE(pos != std::string::npos);
    std::string broken = text;
    broken.replace(pos, 11, "cp = 136e-15");
    CHECK_THROWS_AS(parse_config(broken), ConfigError);
}

TEST_CASE("wrong unit dimension is rejected") {
    std::string text = default_config_text();
    const auto pos = text.find("cp = 136 fF");
    REQUIRE(pos != std::string::npos);
    std::string broken = text;
    broken.replace(pos, 11, "cp = 136 MHz");
    CHECK_THROWS_AS(parse_config(broken), ConfigError);
}

TEST_CASE("missing keys are rejected") {
    std::string text = default_config_text();
    const auto pos = text.find("cp = 136 fF");
    std::string broken = text;
    broken.replace(pos, 11, "");
    CHECK_THROWS_AS(parse_config(broken), ConfigError);
}

TEST_CASE("noise spec resolution against the operating point") {
    const auto cfg = default_config();
    const auto spec = make_noise(cfg);
    // input-referred 3.7 aF/rtHz at the default operating point (q ~ 77)
    const auto res = resonance(make_tank(cfg, cfg.clCode, cfg.crCode));
    const double alpha = std::abs(res.q) / (cfg.cp + cfg.cpar);
    CHECK(spec.whitePhase == doctest::Approx(3.7e-18 * alpha).epsilon(1e-9));
    CHECK(spec.flickerCorner == doctest::Approx(300.0));
    const auto specWhite = make_noise(cfg, false);
    CHECK(specWhite.flickerCorner == 0.0);
}
