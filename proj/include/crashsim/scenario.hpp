#ifndef CRASHSIM_SCENARIO_HPP
#define CRASHSIM_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crashsim/sim.hpp"

namespace crashsim::scenario {

// The sampled tuple defining one imminent-collision episode.
struct ScenarioParams {
    double ttc = 1.0;                 // s, U(0.25, 1.5)
    double collision_velocity = 10.0; // m/s, ego initial speed, U(1, 30)
    double pedestrian_velocity = 2.0; // m/s, U(1, 5)
    int n_cars = 0;                   // ambient vehicles, {0..10}
    int n_pedestrians = 0;            // ambient pedestrians, {0..10}
    double p_ped_infraction = 0.0;    // U(0, 1), > 0.5 spawns a crossing pedestrian
    double p_car_infraction = 0.0;    // U(0, 1), > 0.5 spawns an intersecting vehicle
    std::uint64_t seed = 0;
};

struct BankGrid {
    std::vector<double> ttc_values;
    std::vector<double> speed_values;
    int setups_per_cell = 1;
};

struct ScenarioBank {
    std::uint64_t bank_seed = 0;
    BankGrid grid;
    std::vector<ScenarioParams> entries;
};

// An actor deliberately placed on an intersecting trajectory.
struct Infraction {
    int actor_index = -1;
    sim::Vec2 crossing_point;  // where the trajectories meet
    double ttc = 0.0;          // intended first-contact time
};

struct BuiltScenario {
    sim::WorldState world;
    std::vector<Infraction> infractions;
    ScenarioParams params;
};

// Draws every field from its distribution using a splitmix64 stream over the
// given seed. Same seed, same params.
ScenarioParams sample_params(std::uint64_t seed);

// Spawn pose for an actor moving straight at actor_speed whose center
// coincides with the ego center at t = ttc when the ego holds speed and
// heading. approach_angle is the direction of motion relative to the ego
// heading. Returns nullopt when the trajectories have no unique crossing
// (parallel motion at equal speed); the caller resamples the angle.
std::optional<std::pair<sim::Vec2, sim::Vec2>> intersect_spawn(const sim::EgoState& ego,
                                                               double ttc, double actor_speed,
                                                               double approach_angle);

// First time in [0, horizon] at which the actor's footprint touches the ego
// box, with both bodies holding their current velocities. Scan plus bisection
// over the overlap predicates. nullopt if they never touch.
std::optional<double> first_contact_time(const sim::EgoState& ego, const sim::ActorState& actor,
                                         double horizon,
                                         const sim::VehicleParams& vp = sim::VehicleParams{});

// Builds the full world for one episode: ego on a straight lane at the
// collision velocity, intersecting actors timed to first contact at ttc,
// ambient traffic on non-intersecting paths, poles along the sidewalk edges.
BuiltScenario build_world(const ScenarioParams& params);

// True once the infraction can no longer produce a first contact: the actor
// already touched the ego, or either party has cleared the crossing point by
// the clearance margin along its direction of travel.
bool infraction_resolved(const sim::WorldState& world, const Infraction& inf,
                         double clearance = 5.0);

// Episode termination: the time limit expired, or the ego has come to a stop
// with every infraction resolved.
bool episode_complete(const sim::WorldState& world, const std::vector<Infraction>& infractions,
                      double clearance = 5.0);

// Grid-swept bank: |ttc| x |speeds| x setups entries. Cell values override
// the sampled ttc and collision velocity; everything else comes from the
// per-entry seed splitmix64(bank_seed XOR index).
ScenarioBank build_test_bank(std::uint64_t bank_seed, const std::vector<double>& ttc_values,
                             const std::vector<double>& speed_values, int setups_per_cell);

std::string bank_to_json(const ScenarioBank& bank);
ScenarioBank bank_from_json(const std::string& text);

void save_bank(const ScenarioBank& bank, const std::string& path);
ScenarioBank load_bank(const std::string& path);

}  // namespace crashsim::scenario

#endif
