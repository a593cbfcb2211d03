#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "impedancemetry/planner.hpp"

using namespace impedancemetry;

TEST_CASE("channel allocation") {
    SUBCASE("hard bound: 1 GHz / 1 us supports 1000 channels at 1 MHz spacing") {
        CHECK(max_channels(1e9, 1e-6) == 1000);
        const auto plan = allocate(1e9, 1e-6, 1000);
        CHECK(plan.spacing == doctest::Approx(1e6));
        CHECK(plan.frequencies.size() == 1000);
        CHECK_THROWS_AS(allocate(1e9, 1e-6, 1001), std::runtime_error);
    }
    SUBCASE("5 MHz resolution in 1 GHz gives 200 channels") {
        const auto plan = allocate(1e9, 1e-6, 200);
        CHECK(plan.spacing == doctest::Approx(5e6));
        // a 10-row tile only uses 10 of them
        const auto tile = allocate(1e9, 1e-6, 10);
        CHECK(tile.frequencies.size() == 10);
    }
    SUBCASE("single channel sits at the band center") {
        const auto plan = allocate(1e9, 1e-6, 1);
        CHECK(plan.frequencies.size() == 1);
        CHECK(plan.frequencies[0] == doctest::Approx(0.5e9));
    }
    SUBCASE("channels never overlap and keep the distinguishability spacing") {
        for (int n : {2, 7, 100, 500}) {
            const auto plan = allocate(1e9, 1e-6, n);
            for (std::size_t i = 1; i < plan.frequencies.size(); ++i) {
                const double gap = plan.frequencies[i] - plan.frequencies[i - 1];
                CHECK(gap >= 1.0 / plan.readoutTime - 1e-6);
            }
            CHECK(plan.frequencies.back() <= plan.bandwidth);
            CHECK(plan.frequencies.front() >= 0.0);
        }
    }
}

TEST_CASE("footprint tables reproduce the budget arithmetic") {
    SUBCASE("reflectometry at n=10, m=1") {
        const auto rep = footprint_report(reflectometry_budget(), 10, 1);
        CHECK(rep.total == doctest::Approx(110.100001).epsilon(1e-9));
        CHECK(rep.dominant == "couplers");
    }
    SUBCASE("passive impedancemetry at n=10, m=1") {
        const auto rep = footprint_report(impedancemetry_passive_budget(), 10, 1);
        CHECK(rep.total == doctest::Approx(10.120001).epsilon(1e-9));
        CHECK(rep.dominant == "inductors");
    }
    SUBCASE("active impedancemetry at n=10, m=1") {
        const auto rep = footprint_report(impedancemetry_active_budget(), 10, 1);
        CHECK(rep.total == doctest::Approx(0.130001).epsilon(1e-9));
    }
    SUBCASE("swapping the inductor row changes only that row") {
        const auto pass = footprint_report(impedancemetry_passive_budget(), 10, 1);
        const auto act = footprint_report(impedancemetry_active_budget(), 10, 1);
        REQUIRE(pass.rows.size() == act.rows.size());
        for (std::size_t i = 0; i < pass.rows.size(); ++i) {
            if (pass.rows[i].name == "inductors") {
                CHECK(act.rows[i].total != pass.rows[i].total);
            } else {
                CHECK(act.rows[i].total == pass.rows[i].total);
            }
        }
    }
    SUBCASE("empty table and m = 0 are errors") {
        CHECK_THROWS_AS(footprint_report({}, 10, 1), std::invalid_argument);
        CHECK_THROWS_AS(footprint_report(reflectometry_budget(), 10, 0), std::runtime_error);
    }
    SUBCASE("scaling laws evaluate exactly") {
        CHECK(scaled_count(ScalingLaw::mN2, 10, 3) == 300.0);
        CHECK(scaled_count(ScalingLaw::mN, 10, 3) == 30.0);
        CHECK(scaled_count(ScalingLaw::m, 10, 3) == 3.0);
    }
}

TEST_CASE("power per qubit") {
    CHECK(power_per_qubit(85e-6, 10) == doctest::Approx(8.5e-6));
    CHECK(power_per_qubit(85e-6, 1) == doctest::Approx(85e-6));
    CHECK(power_per_qubit(85e-6, 100) == doctest::Approx(0.85e-6));
    CHECK_THROWS_AS(power_per_qubit(85e-6, 0), std::invalid_argument);
}

TEST_CASE("inductance density comparison") {
    const auto rep = inductance_density_comparison();
    CHECK(rep.activeOverPassive == doctest::Approx(3.15e4).epsilon(2e-3));
    CHECK(rep.activeOverSuperconducting == doctest::Approx(1.08e3).epsilon(2e-3));
    CHECK(rep.active / rep.active == 1.0);
    CHECK(!rep.note.empty());  // the order-of-magnitude wording discrepancy is flagged
}
