#ifndef CRASHSIM_INJURY_HPP
#define CRASHSIM_INJURY_HPP

#include <vector>

#include "crashsim/sim.hpp"

namespace crashsim::injury {

// Pedestrian fatality risk as a function of vehicle impact speed in km/h,
// fit to German in-depth accident data. Logistic in |v|, result in (0, 1).
double pedestrian_risk(double impact_speed_kmh);

// Occupant severe-injury risk as a quartic in delta-v. Input in km/h; the
// 0.621 factor converts to mph to fit the original model. Clamped to 1.
double occupant_risk(double delta_v_kmh);

// Per-episode record of everyone involved in collisions. Pedestrian entries
// carry the vehicle impact speed; occupant entries carry that vehicle's
// delta-v. Speeds are km/h (converted from sim m/s at this boundary).
struct LedgerEntry {
    bool is_pedestrian = false;
    int occupant_count = 1;    // occupant entries only, >= 1
    double speed_kmh = 0.0;    // impact speed (pedestrian) or delta-v (occupants)
};

struct CollisionLedger {
    std::vector<LedgerEntry> entries;

    void add_pedestrian(double impact_speed_kmh) {
        entries.push_back({true, 1, impact_speed_kmh});
    }
    void add_occupants(int count, double delta_v_kmh) {
        entries.push_back({false, count, delta_v_kmh});
    }

    int pedestrian_count() const;
    int occupant_count() const;
    double summed_pedestrian_risk() const;
    double summed_occupant_risk() const;
};

// Folds one collision event into the ledger. A struck pedestrian is booked at
// the ego's impact speed; a struck vehicle books one occupant at that
// vehicle's delta-v. Every event also books the ego occupant at the ego's own
// delta-v, so both parties of each collision are counted.
void apply_event(CollisionLedger& ledger, const sim::CollisionEvent& event);

// Reward strategy 1: flat head count, -(nr_ped + nr_occ). Zero when empty.
double reward_r1(const CollisionLedger& ledger);

// Reward strategy 2: risk-weighted, -(sum of pedestrian risks + occupant
// counts times occupant risks). Zero when empty.
double reward_r2(const CollisionLedger& ledger);

constexpr double kMsToKmh = 3.6;

}  // namespace crashsim::injury

#endif
