#include "crashsim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "crashsim/rng.hpp"
#include "json.hpp"

namespace crashsim::scenario {

using sim::ActorKind;
using sim::ActorState;
using sim::EgoState;
using sim::Footprint;
using sim::Vec2;
using sim::VehicleParams;
using sim::WorldState;

namespace {

constexpr std::uint64_t kWorldSalt = 0x57524C44u;  // draw-stream tag for build_world

// Lateral layout from the ego centerline outward: ego lane edge 1.75, the
// oncoming ambient lane is centered at 3.5, sidewalks at 4.5, poles at 5.75.
// Bands are disjoint so ambient traffic never brushes the statics.
constexpr double kLaneHalfWidth = 1.75;        // m
constexpr double kOncomingLaneCenter = 3.5;    // m
constexpr double kSidewalkCenter = 4.5;        // m, ambient pedestrian paths
constexpr double kPoleLine = 5.75;             // m, sidewalk outer edge
constexpr double kPoleHalf = 0.15;             // m, 0.3 x 0.3 pole cross-section
constexpr double kPoleSpacing = 25.0;          // m
constexpr double kIntersectCarSpeedLo = 3.0;   // m/s, urban intersecting-vehicle
constexpr double kIntersectCarSpeedHi = 15.0;  // speed band

// Overlap between the ego box and the actor at time t with both bodies
// holding their current velocities.
bool overlap_at_time(const EgoState& ego, const ActorState& actor, double t,
                     const VehicleParams& vp) {
    EgoState e = ego;
    e.position = ego.position + ego.velocity() * t;
    const sim::Obb ego_box = sim::ego_obb(e, vp);
    const Vec2 pos = actor.position + actor.velocity * t;
    if (actor.footprint.is_disc) {
        return sim::disc_obb_overlap(pos, actor.footprint.radius, ego_box);
    }
    ActorState a = actor;
    a.position = pos;
    return sim::obb_overlap(sim::actor_obb(a), ego_box);
}

bool overlaps_any(const ActorState& candidate, const WorldState& world, const VehicleParams& vp) {
    const sim::Obb ego_box = sim::ego_obb(world.ego, vp);
    if (candidate.footprint.is_disc) {
        if (sim::disc_obb_overlap(candidate.position, candidate.footprint.radius, ego_box)) return true;
    } else if (sim::obb_overlap(sim::actor_obb(candidate), ego_box)) {
        return true;
    }
    for (const ActorState& other : world.actors) {
        const bool cd = candidate.footprint.is_disc;
        const bool od = other.footprint.is_disc;
        bool hit;
        if (cd && od) {
            hit = (candidate.position - other.position).norm() <=
                  candidate.footprint.radius + other.footprint.radius;
        } else if (cd) {
            hit = sim::disc_obb_overlap(candidate.position, candidate.footprint.radius,
                                        sim::actor_obb(other));
        } else if (od) {
            hit = sim::disc_obb_overlap(other.position, other.footprint.radius,
                                        sim::actor_obb(candidate));
        } else {
            hit = sim::obb_overlap(sim::actor_obb(candidate), sim::actor_obb(other));
        }
        if (hit) return true;
    }
    return false;
}

// Shifts the actor spawn along the relative velocity so the first contact
// lands exactly at ttc. Relative motion is linear, so moving the spawn by
// (t_contact - ttc) * (v_actor - v_ego) time-translates the whole overlap
// interval without changing its geometry. Afterwards verifies that a rollout
// sampled on the fixed timestep still sees the contact no later than
// ttc + 2 dt (a grazing overlap can fall between step boundaries).
bool retime_to_contact(const EgoState& ego, ActorState& actor, double ttc,
                       const VehicleParams& vp) {
    double t0;
    if (overlap_at_time(ego, actor, 0.0, vp)) {
        // The design-time spawn already overlaps: the true start of the
        // overlap interval lies in negative time, so walk backwards to it
        // (relative motion is linear, so negative t is well defined).
        const double step = sim::kTimestep / 8.0;
        double t = 0.0;
        while (overlap_at_time(ego, actor, t, vp)) {
            t -= step;
            if (t < -30.0) return false;  // near-parallel graze, retry the draw
        }
        double lo = t, hi = t + step;  // lo clear, hi overlapping
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (lo + hi);
            (overlap_at_time(ego, actor, mid, vp) ? hi : lo) = mid;
        }
        t0 = hi;
    } else {
        const auto t = first_contact_time(ego, actor, ttc + 3.0, vp);
        if (!t) return false;
        t0 = *t;
    }
    const Vec2 rel = actor.velocity - ego.velocity();
    actor.position = actor.position + rel * (t0 - ttc);

    const double dt = sim::kTimestep;
    for (int k = 0; k <= static_cast<int>(std::ceil(ttc / dt)) + 2; ++k) {
        const double t = k * dt;
        if (t > ttc + 2.0 * dt) break;
        const bool hit = overlap_at_time(ego, actor, t, vp);
        if (t < ttc) {
            if (hit) return false;  // contact must not start ahead of schedule
            continue;
        }
        if (hit) return true;
    }
    return false;
}

ActorState make_crossing_pedestrian(const EgoState& ego, const ScenarioParams& p, Rng& rng) {
    const double side = rng.uniform() < 0.5 ? 1.0 : -1.0;
    const double angle = side * M_PI / 2.0 + rng.uniform(-M_PI / 6.0, M_PI / 6.0);
    const auto spawn = intersect_spawn(ego, p.ttc, p.pedestrian_velocity, angle);
    ActorState a;
    a.kind = ActorKind::pedestrian;
    a.footprint = Footprint::disc(sim::kPedestrianRadius);
    a.mass = sim::kPedestrianMass;
    if (spawn) {
        a.position = spawn->first;
        a.velocity = spawn->second;
    }
    a.heading = std::atan2(a.velocity.y, a.velocity.x);
    return a;
}

ActorState make_intersecting_vehicle(const EgoState& ego, const ScenarioParams& p, Rng& rng,
                                     const VehicleParams& vp) {
    const double speed = rng.uniform(kIntersectCarSpeedLo, kIntersectCarSpeedHi);
    double angle;
    if (rng.uniform() < 0.5) {
        angle = M_PI + rng.uniform(-M_PI / 9.0, M_PI / 9.0);  // oncoming
    } else {
        const double side = rng.uniform() < 0.5 ? 1.0 : -1.0;
        angle = side * M_PI / 2.0 + rng.uniform(-M_PI / 9.0, M_PI / 9.0);  // crossing
    }
    const auto spawn = intersect_spawn(ego, p.ttc, speed, angle);
    ActorState a;
    a.kind = ActorKind::vehicle;
    a.footprint = Footprint::box(vp.half_length, vp.half_width);
    a.mass = vp.mass;
    if (spawn) {
        a.position = spawn->first;
        a.velocity = spawn->second;
    }
    a.heading = std::atan2(a.velocity.y, a.velocity.x);
    return a;
}

}  // namespace

ScenarioParams sample_params(std::uint64_t seed) {
    Rng rng(seed);
    ScenarioParams p;
    p.ttc = rng.uniform(0.25, 1.5);
    p.collision_velocity = rng.uniform(1.0, 30.0);
    p.pedestrian_velocity = rng.uniform(1.0, 5.0);
    p.n_cars = rng.uniform_int(0, 10);
    p.n_pedestrians = rng.uniform_int(0, 10);
    p.p_ped_infraction = rng.uniform();
    p.p_car_infraction = rng.uniform();
    p.seed = seed;
    return p;
}

std::optional<std::pair<Vec2, Vec2>> intersect_spawn(const EgoState& ego, double ttc,
                                                     double actor_speed, double approach_angle) {
    const Vec2 actor_vel = Vec2::unit(ego.heading + approach_angle) * actor_speed;
    if ((actor_vel - ego.velocity()).norm() < 1e-9) return std::nullopt;
    const Vec2 crossing = ego.position + ego.velocity() * ttc;
    return std::make_pair(crossing - actor_vel * ttc, actor_vel);
}

std::optional<double> first_contact_time(const EgoState& ego, const ActorState& actor,
                                         double horizon, const VehicleParams& vp) {
    const auto overlap_at = [&](double t) { return overlap_at_time(ego, actor, t, vp); };

    const double step = sim::kTimestep / 8.0;
    double prev = 0.0;
    if (overlap_at(0.0)) return 0.0;
    for (double t = step; t <= horizon + step; t += step) {
        if (overlap_at(t)) {
            double lo = prev, hi = t;  // lo clear, hi overlapping
            for (int i = 0; i < 60; ++i) {
                const double mid = 0.5 * (lo + hi);
                (overlap_at(mid) ? hi : lo) = mid;
            }
            return hi;
        }
        prev = t;
    }
    return std::nullopt;
}

BuiltScenario build_world(const ScenarioParams& params) {
    const VehicleParams vp;
    BuiltScenario out;
    out.params = params;

    WorldState& world = out.world;
    world.ego.position = {0.0, 0.0};
    world.ego.heading = 0.0;
    world.ego.speed = params.collision_velocity;
    world.lane.centerline = {{-100.0, 0.0}, {600.0, 0.0}};
    world.lane.half_width = kLaneHalfWidth;

    // Poles along both sidewalk outer edges. Deterministic, placed first so
    // every random spawn is checked against them.
    for (double x = 0.0; x <= 450.0; x += kPoleSpacing) {
        for (const double side : {1.0, -1.0}) {
            ActorState pole;
            pole.kind = ActorKind::static_obstacle;
            pole.position = {x, side * kPoleLine};
            pole.footprint = Footprint::box(kPoleHalf, kPoleHalf);
            pole.mass = vp.mass;  // unused, statics take the infinite-mass limit
            world.actors.push_back(pole);
        }
    }

    // Per-actor redraw loop: a fresh sub-seeded stream per attempt, up to 16
    // attempts, then the actor is omitted.
    const auto place = [&](std::uint64_t ordinal, auto&& make, bool retime) -> int {
        for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
            Rng rng(splitmix64_hash(params.seed ^ kWorldSalt ^ (ordinal * 131 + attempt)));
            ActorState candidate = make(rng);
            if (candidate.velocity.norm() == 0.0 &&
                candidate.kind != ActorKind::static_obstacle) {
                continue;  // degenerate spawn, resample
            }
            if (retime && !retime_to_contact(world.ego, candidate, params.ttc, vp)) continue;
            if (overlaps_any(candidate, world, vp)) continue;
            world.actors.push_back(candidate);
            return static_cast<int>(world.actors.size()) - 1;
        }
        return -1;
    };

    if (params.p_ped_infraction > 0.5) {
        const int idx = place(1, [&](Rng& r) { return make_crossing_pedestrian(world.ego, params, r); },
                              true);
        if (idx >= 0) {
            out.infractions.push_back({idx, world.ego.position + world.ego.velocity() * params.ttc,
                                       params.ttc});
        }
    }
    if (params.p_car_infraction > 0.5) {
        const int idx = place(2, [&](Rng& r) { return make_intersecting_vehicle(world.ego, params, r, vp); },
                              true);
        if (idx >= 0) {
            out.infractions.push_back({idx, world.ego.position + world.ego.velocity() * params.ttc,
                                       params.ttc});
        }
    }

    // Ambient pedestrians walk parallel to the lane on the sidewalks.
    for (int i = 0; i < params.n_pedestrians; ++i) {
        place(16 + static_cast<std::uint64_t>(i), [&](Rng& r) {
            ActorState a;
            a.kind = ActorKind::pedestrian;
            a.footprint = Footprint::disc(sim::kPedestrianRadius);
            a.mass = sim::kPedestrianMass;
            const double side = r.uniform() < 0.5 ? 1.0 : -1.0;
            const double dir = r.uniform() < 0.5 ? 1.0 : -1.0;
            a.position = {r.uniform(5.0, 80.0), side * kSidewalkCenter};
            a.velocity = {dir * r.uniform(0.5, 2.0), 0.0};
            a.heading = dir > 0.0 ? 0.0 : M_PI;
            return a;
        }, false);
    }

    // Ambient vehicles stream down the oncoming lane.
    for (int i = 0; i < params.n_cars; ++i) {
        place(64 + static_cast<std::uint64_t>(i), [&](Rng& r) {
            ActorState a;
            a.kind = ActorKind::vehicle;
            a.footprint = Footprint::box(vp.half_length, vp.half_width);
            a.mass = vp.mass;
            a.position = {r.uniform(10.0, 250.0), kOncomingLaneCenter};
            a.velocity = {-r.uniform(5.0, 15.0), 0.0};
            a.heading = M_PI;
            return a;
        }, false);
    }

    return out;
}

bool infraction_resolved(const sim::WorldState& world, const Infraction& inf, double clearance) {
    if (inf.actor_index < 0 || inf.actor_index >= static_cast<int>(world.actors.size())) {
        return true;  // the builder omitted this actor
    }
    const sim::ActorState& a = world.actors[static_cast<std::size_t>(inf.actor_index)];
    if (a.contacted) return true;
    const sim::Vec2 dir = a.velocity.normalized();
    if ((a.position - inf.crossing_point).dot(dir) > clearance) return true;
    const sim::Vec2 fwd = sim::Vec2::unit(world.ego.heading);
    return (world.ego.position - inf.crossing_point).dot(fwd) > clearance;
}

bool episode_complete(const sim::WorldState& world, const std::vector<Infraction>& infractions,
                      double clearance) {
    if (world.time >= sim::kEpisodeTimeLimit) return true;
    if (world.ego.speed > 0.0) return false;
    for (const Infraction& inf : infractions) {
        if (!infraction_resolved(world, inf, clearance)) return false;
    }
    return true;
}

ScenarioBank build_test_bank(std::uint64_t bank_seed, const std::vector<double>& ttc_values,
                             const std::vector<double>& speed_values, int setups_per_cell) {
    if (ttc_values.empty() || speed_values.empty() || setups_per_cell <= 0) {
        throw std::invalid_argument("build_test_bank: empty grid");
    }
    ScenarioBank bank;
    bank.bank_seed = bank_seed;
    bank.grid = {ttc_values, speed_values, setups_per_cell};
    std::uint64_t index = 0;
    for (double ttc : ttc_values) {
        for (double speed : speed_values) {
            for (int k = 0; k < setups_per_cell; ++k, ++index) {
                ScenarioParams p = sample_params(splitmix64_hash(bank_seed ^ index));
                p.ttc = ttc;
                p.collision_velocity = speed;
                bank.entries.push_back(p);
            }
        }
    }
    return bank;
}

std::string bank_to_json(const ScenarioBank& bank) {
    nlohmann::ordered_json j;
    j["bank_seed"] = bank.bank_seed;
    j["grid"] = {{"ttc_values", bank.grid.ttc_values},
                 {"speed_values", bank.grid.speed_values},
                 {"setups_per_cell", bank.grid.setups_per_cell}};
    j["entries"] = nlohmann::ordered_json::array();
    for (const ScenarioParams& p : bank.entries) {
        j["entries"].push_back({{"ttc", p.ttc},
                                {"collision_velocity", p.collision_velocity},
                                {"pedestrian_velocity", p.pedestrian_velocity},
                                {"n_cars", p.n_cars},
                                {"n_pedestrians", p.n_pedestrians},
                                {"p_ped_infraction", p.p_ped_infraction},
                                {"p_car_infraction", p.p_car_infraction},
                                {"seed", p.seed}});
    }
    return j.dump(2) + "\n";
}

ScenarioBank bank_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ScenarioBank bank;
    bank.bank_seed = j.at("bank_seed").get<std::uint64_t>();
    bank.grid.ttc_values = j.at("grid").at("ttc_values").get<std::vector<double>>();
    bank.grid.speed_values = j.at("grid").at("speed_values").get<std::vector<double>>();
    bank.grid.setups_per_cell = j.at("grid").at("setups_per_cell").get<int>();
    for (const auto& e : j.at("entries")) {
        ScenarioParams p;
        p.ttc = e.at("ttc").get<double>();
        p.collision_velocity = e.at("collision_velocity").get<double>();
        p.pedestrian_velocity = e.at("pedestrian_velocity").get<double>();
        p.n_cars = e.at("n_cars").get<int>();
        p.n_pedestrians = e.at("n_pedestrians").get<int>();
        p.p_ped_infraction = e.at("p_ped_infraction").get<double>();
        p.p_car_infraction = e.at("p_car_infraction").get<double>();
        p.seed = e.at("seed").get<std::uint64_t>();
        bank.entries.push_back(p);
    }
    return bank;
}

void save_bank(const ScenarioBank& bank, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write bank file: " + path);
    f << bank_to_json(bank);
}

ScenarioBank load_bank(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read bank file: " + path);
    return bank_from_json(std::string(std::istreambuf_iterator<char>(f), {}));
}

}  // namespace crashsim::scenario
