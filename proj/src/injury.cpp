#include "crashsim/injury.hpp"

#include <algorithm>
#include <cmath>

namespace crashsim::injury {

double pedestrian_risk(double impact_speed_kmh) {
    return 1.0 / (1.0 + std::exp(6.9 - 0.09 * std::abs(impact_speed_kmh)));
}

double occupant_risk(double delta_v_kmh) {
    const double mph = delta_v_kmh * 0.621;
    const double r = mph / 71.0;
    const double p = r * r * r * r;
    return std::min(1.0, p);
}

int CollisionLedger::pedestrian_count() const {
    int n = 0;
    for (const auto& e : entries) n += e.is_pedestrian ? 1 : 0;
    return n;
}

int CollisionLedger::occupant_count() const {
    int n = 0;
    for (const auto& e : entries) n += e.is_pedestrian ? 0 : e.occupant_count;
    return n;
}

double CollisionLedger::summed_pedestrian_risk() const {
    double s = 0.0;
    for (const auto& e : entries) {
        if (e.is_pedestrian) s += pedestrian_risk(e.speed_kmh);
    }
    return s;
}

double CollisionLedger::summed_occupant_risk() const {
    double s = 0.0;
    for (const auto& e : entries) {
        if (!e.is_pedestrian) s += e.occupant_count * occupant_risk(e.speed_kmh);
    }
    return s;
}

void apply_event(CollisionLedger& ledger, const sim::CollisionEvent& event) {
    switch (event.target_kind) {
        case sim::ActorKind::pedestrian:
            ledger.add_pedestrian(event.ego_speed_at_impact * kMsToKmh);
            break;
        case sim::ActorKind::vehicle:
            ledger.add_occupants(1, event.delta_v_other * kMsToKmh);
            break;
        case sim::ActorKind::static_obstacle:
            break;  // nobody aboard a pole
    }
    ledger.add_occupants(1, event.delta_v_ego * kMsToKmh);
}

double reward_r1(const CollisionLedger& ledger) {
    return -static_cast<double>(ledger.pedestrian_count() + ledger.occupant_count());
}

double reward_r2(const CollisionLedger& ledger) {
    return -(ledger.summed_pedestrian_risk() + ledger.summed_occupant_risk());
}

}  // namespace crashsim::injury
