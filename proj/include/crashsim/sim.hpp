#ifndef CRASHSIM_SIM_HPP
#define CRASHSIM_SIM_HPP

#include <cmath>
#include <cstdint>
#include <vector>

namespace crashsim::sim {

struct Vec2 {
    double x{0.0};
    double y{0.0};

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
    Vec2 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec2{x / n, y / n} : Vec2{0.0, 0.0};
    }
    static Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }
};

// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

// Fixed vehicle/world constants: typical sedan and pedestrian figures.
// These are compiled in; config files may restate but not change them.
struct VehicleParams {
    double wheelbase = 2.7;            // m
    double max_steer = 35.0 * M_PI / 180.0;  // rad
    double brake_max = 9.8;            // m/s^2, pedal = -1
    double throttle_max = 3.0;         // m/s^2, pedal = +1
    double half_length = 2.25;         // m, ego and other vehicles are 4.5 x 1.8 boxes
    double half_width = 0.9;           // m
    double mass = 1500.0;              // kg
};

constexpr double kPedestrianRadius = 0.3;  // m
constexpr double kPedestrianMass = 80.0;   // kg
constexpr double kTimestep = 1.0 / 15.0;   // s, matches the 15 FPS capture rate
constexpr double kEpisodeTimeLimit = 15.0; // s

struct EgoState {
    Vec2 position;              // m
    double heading = 0.0;       // rad, wrapped to (-pi, pi]
    double speed = 0.0;         // m/s, forward, >= 0
    double steering_angle = 0.0;  // rad, |.| <= max_steer

    Vec2 velocity() const { return Vec2::unit(heading) * speed; }
};

enum class ActorKind : std::uint8_t { pedestrian, vehicle, static_obstacle };

// Pedestrians are discs; vehicles and statics are oriented boxes.
struct Footprint {
    bool is_disc = false;
    double radius = 0.0;     // disc
    double half_length = 0.0;  // box, along the body's heading
    double half_width = 0.0;

    static Footprint disc(double r) { return {true, r, 0.0, 0.0}; }
    static Footprint box(double hl, double hw) { return {false, 0.0, hl, hw}; }
};

struct ActorState {
    ActorKind kind = ActorKind::pedestrian;
    Vec2 position;       // m
    Vec2 velocity;       // m/s, statics have zero velocity
    double heading = 0.0;  // rad, box orientation (ignored for discs)
    Footprint footprint;
    double mass = kPedestrianMass;  // kg, statics are treated as infinite mass
    bool contacted = false;         // first-contact latch for the episode
};

struct Lane {
    std::vector<Vec2> centerline;  // polyline, nonempty
    double half_width = 1.75;      // m
};

struct WorldState {
    EgoState ego;
    std::vector<ActorState> actors;  // order is stable across steps
    Lane lane;
    double time = 0.0;       // s
    double dt = kTimestep;   // s
};

struct Action {
    double steer = 0.0;  // [-1, 1], maps to [-max_steer, max_steer]
    double pedal = 0.0;  // [-1, 1], negative braking, positive throttle
};

struct CollisionEvent {
    int actor_index = -1;
    ActorKind target_kind = ActorKind::pedestrian;
    Vec2 contact_normal;          // unit, points from the other body toward the ego
    double ego_speed_at_impact = 0.0;  // m/s
    double delta_v_ego = 0.0;     // m/s
    double delta_v_other = 0.0;   // m/s
    double time = 0.0;            // s
};

// An oriented box in world coordinates, for overlap queries.
struct Obb {
    Vec2 center;
    Vec2 axis;     // unit vector along the box length
    double half_length = 0.0;
    double half_width = 0.0;
};

Obb ego_obb(const EgoState& ego, const VehicleParams& vp);
Obb actor_obb(const ActorState& a);

bool obb_overlap(const Obb& a, const Obb& b);
bool disc_obb_overlap(const Vec2& center, double radius, const Obb& box);

// Advances the ego by one step of the kinematic bicycle model. Velocity is
// integrated first (clamped at zero, no reverse); displacement uses the exact
// constant-acceleration distance for the step so that stopping distances match
// the closed form, and heading follows the arc relation dtheta = ds*tan(d)/L.
// Throws std::invalid_argument on non-finite action components.
EgoState apply_action(const EgoState& ego, const Action& a, double dt,
                      const VehicleParams& vp = VehicleParams{});

// Overlap events for actors that have not yet contacted the ego. Does not
// mutate the world; first-contact latching is done by step_world.
std::vector<CollisionEvent> detect_collisions(const WorldState& world,
                                              const VehicleParams& vp = VehicleParams{});

// One fixed step: ego advances under the action, every non-static actor
// advances by velocity*dt, time advances by dt, then collisions are detected
// on the post-step state and latched so each actor fires at most once.
std::vector<CollisionEvent> step_world(WorldState& world, const Action& a,
                                       const VehicleParams& vp = VehicleParams{});

// Perfectly plastic velocity exchange along the contact normal.
// Static obstacles use the infinite-mass limit (full relative speed to ego).
struct DeltaV {
    double ego = 0.0;    // m/s
    double other = 0.0;  // m/s
};
DeltaV compute_delta_v(const EgoState& ego, const ActorState& other, const Vec2& normal,
                       const VehicleParams& vp = VehicleParams{});

// Lateral distance from a point to the lane centerline polyline.
double distance_to_centerline(const Vec2& p, const Lane& lane);

// True iff the ego center is strictly farther from the centerline than the
// lane half-width.
bool lane_departure(const WorldState& world);

}  // namespace crashsim::sim

#endif
