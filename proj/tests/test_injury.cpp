#include "doctest.h"

#include <cmath>

#include "crashsim/injury.hpp"
#include "crashsim/rng.hpp"

using namespace crashsim::injury;

TEST_CASE("pedestrian risk hits the frozen oracle values") {
    // High-precision evaluations of the logistic, frozen independently.
    CHECK(pedestrian_risk(0.0) == doctest::Approx(0.0010067708200856372).epsilon(1e-12));
    CHECK(pedestrian_risk(50.0) == doctest::Approx(0.083172696493922371).epsilon(1e-12));
    CHECK(std::abs(pedestrian_risk(6.9 / 0.09) - 0.5) < 1e-9);  // sigmoid midpoint
    CHECK(pedestrian_risk(-50.0) == pedestrian_risk(50.0));     // |v| symmetry
}

TEST_CASE("pedestrian risk midpoint slope equals the logistic derivative") {
    const double v = 6.9 / 0.09;
    const double h = 1e-4;
    const double slope = (pedestrian_risk(v + h) - pedestrian_risk(v - h)) / (2 * h);
    CHECK(slope == doctest::Approx(0.09 / 4.0).epsilon(1e-4));
}

TEST_CASE("occupant risk is a clamped quartic in mph") {
    CHECK(occupant_risk(0.0) == 0.0);
    CHECK(occupant_risk(71.0 / 0.621) == 1.0);          // clamp boundary, exact
    CHECK(occupant_risk(200.0) == 1.0);                 // beyond the clamp
    CHECK(occupant_risk(35.5 / 0.621) == doctest::Approx(0.0625).epsilon(1e-12));  // half speed
    CHECK(occupant_risk(54.0) == doctest::Approx(0.049763170830535467).epsilon(1e-12));
}

TEST_CASE("both risk curves are monotone and bounded on a 0-200 km/h sweep") {
    double prev_ped = -1.0, prev_occ = -1.0;
    for (int i = 0; i <= 2000; ++i) {
        const double v = 0.1 * i;
        const double p = pedestrian_risk(v);
        const double o = occupant_risk(v);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(o >= 0.0);
        CHECK(o <= 1.0);
        CHECK(p >= prev_ped);
        CHECK(o >= prev_occ);
        prev_ped = p;
        prev_occ = o;
    }
}

TEST_CASE("reward r1 counts heads, reward r2 sums risks") {
    CollisionLedger empty;
    CHECK(reward_r1(empty) == 0.0);
    CHECK(reward_r2(empty) == 0.0);

    CollisionLedger two_ped_three_occ;
    two_ped_three_occ.add_pedestrian(30.0);
    two_ped_three_occ.add_pedestrian(80.0);
    two_ped_three_occ.add_occupants(1, 20.0);
    two_ped_three_occ.add_occupants(2, 54.0);
    CHECK(two_ped_three_occ.pedestrian_count() == 2);
    CHECK(two_ped_three_occ.occupant_count() == 3);
    CHECK(reward_r1(two_ped_three_occ) == -5.0);

    CollisionLedger one_ped;
    one_ped.add_pedestrian(50.0);
    CHECK(reward_r2(one_ped) == doctest::Approx(-0.083172696493922371).epsilon(1e-12));
    CHECK(reward_r1(one_ped) == -1.0);  // speed-independent
    one_ped.entries[0].speed_kmh = 120.0;
    CHECK(reward_r1(one_ped) == -1.0);
}

TEST_CASE("head-on example: two single-occupant cars at 54 km/h delta-v") {
    CollisionLedger ledger;
    ledger.add_occupants(1, 54.0);
    ledger.add_occupants(1, 54.0);
    CHECK(reward_r2(ledger) == doctest::Approx(-2.0 * 0.049763170830535467).epsilon(1e-12));
}

TEST_CASE("r2 magnitude never exceeds r1 magnitude") {
    crashsim::Rng rng = crashsim::Rng(8080);
    for (int trial = 0; trial < 200; ++trial) {
        CollisionLedger ledger;
        const int n = rng.uniform_int(0, 6);
        for (int i = 0; i < n; ++i) {
            if (rng.uniform() < 0.5) {
                ledger.add_pedestrian(rng.uniform(0.0, 150.0));
            } else {
                ledger.add_occupants(rng.uniform_int(1, 4), rng.uniform(0.0, 150.0));
            }
        }
        CHECK(std::abs(reward_r2(ledger)) <= std::abs(reward_r1(ledger)) + 1e-12);
    }
}
