#include "crashsim/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace crashsim::sim {

double wrap_angle(double a) {
    a = std::fmod(a + M_PI, 2.0 * M_PI);
    if (a <= 0.0) a += 2.0 * M_PI;
    return a - M_PI;
}

Obb ego_obb(const EgoState& ego, const VehicleParams& vp) {
    return {ego.position, Vec2::unit(ego.heading), vp.half_length, vp.half_width};
}

Obb actor_obb(const ActorState& a) {
    return {a.position, Vec2::unit(a.heading), a.footprint.half_length, a.footprint.half_width};
}

namespace {

// Projection radius of a box onto a direction.
double project_radius(const Obb& b, const Vec2& dir) {
    const Vec2 perp{-b.axis.y, b.axis.x};
    return b.half_length * std::abs(b.axis.dot(dir)) + b.half_width * std::abs(perp.dot(dir));
}

}  // namespace

bool obb_overlap(const Obb& a, const Obb& b) {
    // Separating axis test over the four face normals.
    const Vec2 d = b.center - a.center;
    const std::array<Vec2, 4> axes = {
        a.axis, Vec2{-a.axis.y, a.axis.x}, b.axis, Vec2{-b.axis.y, b.axis.x}};
    for (const Vec2& ax : axes) {
        if (std::abs(d.dot(ax)) > project_radius(a, ax) + project_radius(b, ax)) return false;
    }
    return true;
}

bool disc_obb_overlap(const Vec2& center, double radius, const Obb& box) {
    // Closest point on the box to the disc center, in box coordinates.
    const Vec2 d = center - box.center;
    const Vec2 perp{-box.axis.y, box.axis.x};
    const double u = std::clamp(d.dot(box.axis), -box.half_length, box.half_length);
    const double v = std::clamp(d.dot(perp), -box.half_width, box.half_width);
    const Vec2 closest = box.center + box.axis * u + perp * v;
    return (center - closest).norm() <= radius;
}

EgoState apply_action(const EgoState& ego, const Action& a, double dt, const VehicleParams& vp) {
    if (!std::isfinite(a.steer) || !std::isfinite(a.pedal)) {
        throw std::invalid_argument("apply_action: non-finite action component");
    }
    const double steer = std::clamp(a.steer, -1.0, 1.0);
    const double pedal = std::clamp(a.pedal, -1.0, 1.0);

    EgoState next = ego;
    next.steering_angle = steer * vp.max_steer;

    const double accel = pedal < 0.0 ? pedal * vp.brake_max : pedal * vp.throttle_max;
    const double v0 = ego.speed;
    double v1 = v0 + accel * dt;
    double ds;
    if (v1 <= 0.0) {
        // Stops mid-step: exact distance to rest, no reverse.
        ds = accel < 0.0 ? -v0 * v0 / (2.0 * accel) : 0.0;
        v1 = 0.0;
    } else {
        ds = 0.5 * (v0 + v1) * dt;
    }

    const double dtheta = ds * std::tan(next.steering_angle) / vp.wheelbase;
    const Vec2 dir = Vec2::unit(ego.heading + 0.5 * dtheta);
    next.position = ego.position + dir * ds;
    next.heading = wrap_angle(ego.heading + dtheta);
    next.speed = v1;
    return next;
}

std::vector<CollisionEvent> detect_collisions(const WorldState& world, const VehicleParams& vp) {
    std::vector<CollisionEvent> events;
    const Obb ego_box = ego_obb(world.ego, vp);
    const Vec2 ego_vel = world.ego.velocity();

    for (int i = 0; i < static_cast<int>(world.actors.size()); ++i) {
        const ActorState& actor = world.actors[i];
        if (actor.contacted) continue;

        bool hit;
        if (actor.footprint.is_disc) {
            hit = disc_obb_overlap(actor.position, actor.footprint.radius, ego_box);
        } else {
            hit = obb_overlap(ego_box, actor_obb(actor));
        }
        if (!hit) continue;

        Vec2 normal = (world.ego.position - actor.position).normalized();
        if (normal.norm() == 0.0) normal = Vec2::unit(world.ego.heading) * -1.0;

        CollisionEvent ev;
        ev.actor_index = i;
        ev.target_kind = actor.kind;
        ev.contact_normal = normal;
        ev.ego_speed_at_impact = world.ego.speed;
        const DeltaV dv = compute_delta_v(world.ego, actor, normal, vp);
        ev.delta_v_ego = dv.ego;
        ev.delta_v_other = dv.other;
        ev.time = world.time;
        events.push_back(ev);
    }
    return events;
}

std::vector<CollisionEvent> step_world(WorldState& world, const Action& a, const VehicleParams& vp) {
    world.ego = apply_action(world.ego, a, world.dt, vp);
    for (ActorState& actor : world.actors) {
        if (actor.kind != ActorKind::static_obstacle) {
            actor.position = actor.position + actor.velocity * world.dt;
        }
    }
    world.time += world.dt;

    std::vector<CollisionEvent> events = detect_collisions(world, vp);
    for (const CollisionEvent& ev : events) {
        world.actors[static_cast<std::size_t>(ev.actor_index)].contacted = true;
    }
    return events;
}

DeltaV compute_delta_v(const EgoState& ego, const ActorState& other, const Vec2& normal,
                       const VehicleParams& vp) {
    const double u = std::abs((ego.velocity() - other.velocity).dot(normal));
    if (other.kind == ActorKind::static_obstacle) {
        return {u, 0.0};  // infinite-mass limit
    }
    const double total = vp.mass + other.mass;
    return {other.mass / total * u, vp.mass / total * u};
}

double distance_to_centerline(const Vec2& p, const Lane& lane) {
    double best = std::numeric_limits<double>::infinity();
    const auto& pts = lane.centerline;
    if (pts.size() == 1) return (p - pts[0]).norm();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vec2 a = pts[i];
        const Vec2 ab = pts[i + 1] - a;
        const double len2 = ab.dot(ab);
        const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, (p - (a + ab * t)).norm());
    }
    return best;
}

bool lane_departure(const WorldState& world) {
    return distance_to_centerline(world.ego.position, world.lane) > world.lane.half_width;
}

}  // namespace crashsim::sim
