#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crashsim/rng.hpp"
#include "crashsim/sim.hpp"

using namespace crashsim;
using namespace crashsim::sim;

namespace {

WorldState straight_road_world(double ego_speed) {
    WorldState w;
    w.ego.position = {0.0, 0.0};
    w.ego.heading = 0.0;
    w.ego.speed = ego_speed;
    w.lane.centerline = {{-100.0, 0.0}, {600.0, 0.0}};
    w.lane.half_width = 1.75;
    return w;
}

// Dense point-sampling containment oracle for box overlap: samples a grid of
// points of each box and asks whether any lies inside the other.
bool boxes_overlap_sampled(const Obb& a, const Obb& b, int n) {
    const auto inside = [](const Vec2& p, const Obb& box) {
        const Vec2 d = p - box.center;
        const Vec2 perp{-box.axis.y, box.axis.x};
        return std::abs(d.dot(box.axis)) <= box.half_length &&
               std::abs(d.dot(perp)) <= box.half_width;
    };
    const auto scan = [&](const Obb& src, const Obb& dst) {
        const Vec2 perp{-src.axis.y, src.axis.x};
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j <= n; ++j) {
                const double u = -src.half_length + 2.0 * src.half_length * i / n;
                const double v = -src.half_width + 2.0 * src.half_width * j / n;
                if (inside(src.center + src.axis * u + perp * v, dst)) return true;
            }
        }
        return false;
    };
    return scan(a, b) || scan(b, a);
}

}  // namespace

TEST_CASE("wrap_angle maps onto (-pi, pi]") {
    CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
    CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_angle(1.5 * M_PI) == doctest::Approx(-0.5 * M_PI));
    CHECK(wrap_angle(2.0 * M_PI) == doctest::Approx(0.0));
    CHECK(wrap_angle(-7.0 * M_PI) == doctest::Approx(M_PI));
}

TEST_CASE("zero action coasts in a straight line") {
    EgoState ego;
    ego.speed = 12.0;
    const EgoState next = apply_action(ego, {0.0, 0.0}, kTimestep);
    CHECK(next.position.x == doctest::Approx(12.0 * kTimestep).epsilon(1e-12));
    CHECK(next.position.y == doctest::Approx(0.0));
    CHECK(next.speed == 12.0);
    CHECK(next.heading == 0.0);
}

TEST_CASE("full brake from 10 m/s leaves 0.2 m/s after one second") {
    EgoState ego;
    ego.speed = 10.0;
    for (int i = 0; i < 15; ++i) ego = apply_action(ego, {0.0, -1.0}, kTimestep);
    CHECK(ego.speed == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("stopping distance matches the closed form at every test speed") {
    for (const double v0 : {5.0, 10.0, 20.0, 30.0}) {
        EgoState ego;
        ego.speed = v0;
        int guard = 0;
        while (ego.speed > 0.0 && guard++ < 10000) {
            ego = apply_action(ego, {0.0, -1.0}, kTimestep);
        }
        const double oracle = v0 * v0 / (2.0 * 9.8);
        CHECK(ego.position.x == doctest::Approx(oracle).epsilon(1e-6));
        CHECK(std::abs(ego.position.x - oracle) / oracle < 0.01);
    }
}

TEST_CASE("speed clamps at zero and the car stays put under further braking") {
    EgoState ego;
    ego.speed = 3.0;
    for (int i = 0; i < 30; ++i) ego = apply_action(ego, {0.3, -1.0}, kTimestep);
    CHECK(ego.speed == 0.0);
    const Vec2 rest = ego.position;
    for (int i = 0; i < 10; ++i) ego = apply_action(ego, {0.3, -1.0}, kTimestep);
    CHECK(ego.speed == 0.0);
    CHECK(ego.position.x == rest.x);
    CHECK(ego.position.y == rest.y);
}

TEST_CASE("speed is never negative under random action sequences") {
    Rng rng(99);
    EgoState ego;
    ego.speed = rng.uniform(0.0, 30.0);
    for (int i = 0; i < 500; ++i) {
        ego = apply_action(ego, {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}, kTimestep);
        CHECK(ego.speed >= 0.0);
    }
}

TEST_CASE("non-finite actions are rejected") {
    EgoState ego;
    ego.speed = 5.0;
    CHECK_THROWS_AS(apply_action(ego, {std::nan(""), 0.0}, kTimestep), std::invalid_argument);
    CHECK_THROWS_AS(apply_action(ego, {0.0, INFINITY}, kTimestep), std::invalid_argument);
}

TEST_CASE("constant steer traces a circle of the bicycle-model radius") {
    const VehicleParams vp;
    const double steer = 0.4;  // fraction of max_steer
    const double delta = steer * vp.max_steer;
    const double radius = vp.wheelbase / std::tan(delta);

    EgoState ego;
    ego.speed = 8.0;
    const Vec2 center{0.0, radius};  // left turn from the origin heading +x
    for (int i = 0; i < 200; ++i) {
        ego = apply_action(ego, {steer, 0.0}, kTimestep);
        CHECK((ego.position - center).norm() == doctest::Approx(radius).epsilon(5e-3));
    }
    CHECK(ego.heading == doctest::Approx(wrap_angle(200 * 8.0 * kTimestep * std::tan(delta) /
                                                    vp.wheelbase)).epsilon(1e-9));
}

TEST_CASE("actions are clamped to the unit box") {
    EgoState ego;
    ego.speed = 10.0;
    const EgoState hard = apply_action(ego, {5.0, -9.0}, kTimestep);
    const EgoState unit = apply_action(ego, {1.0, -1.0}, kTimestep);
    CHECK(hard.position.x == unit.position.x);
    CHECK(hard.speed == unit.speed);
    CHECK(hard.steering_angle == unit.steering_angle);
}

TEST_CASE("disjoint bodies produce no collision events") {
    WorldState w = straight_road_world(10.0);
    ActorState ped;
    ped.kind = ActorKind::pedestrian;
    ped.position = {30.0, 5.0};
    ped.footprint = Footprint::disc(kPedestrianRadius);
    w.actors.push_back(ped);
    CHECK(detect_collisions(w).empty());
}

TEST_CASE("a pedestrian disc inside the ego box fires one pedestrian event") {
    WorldState w = straight_road_world(10.0);
    ActorState ped;
    ped.kind = ActorKind::pedestrian;
    ped.position = {1.0, 0.2};
    ped.footprint = Footprint::disc(kPedestrianRadius);
    ped.mass = kPedestrianMass;
    w.actors.push_back(ped);

    const auto events = detect_collisions(w);
    REQUIRE(events.size() == 1);
    CHECK(events[0].target_kind == ActorKind::pedestrian);
    CHECK(events[0].actor_index == 0);
    CHECK(events[0].contact_normal.norm() == doctest::Approx(1.0));
    CHECK(events[0].ego_speed_at_impact == 10.0);
}

TEST_CASE("axis-aligned projections overlapping is not enough: rotated separating axis") {
    // A thin diagonal box near the corner of a unit box: both world-axis
    // projections overlap, but the diagonal axis separates them.
    const Obb a{{0.0, 0.0}, {1.0, 0.0}, 1.0, 1.0};
    const Obb b{{1.73, 1.73}, Vec2::unit(M_PI / 4.0), 1.0, 0.05};

    // World-axis projections overlap.
    CHECK(std::abs(b.center.x) < 1.0 + (1.0 * std::cos(M_PI / 4) + 0.05 * std::sin(M_PI / 4)));
    CHECK(std::abs(b.center.y) < 1.0 + (1.0 * std::cos(M_PI / 4) + 0.05 * std::sin(M_PI / 4)));

    CHECK_FALSE(obb_overlap(a, b));
    CHECK_FALSE(boxes_overlap_sampled(a, b, 120));
}

TEST_CASE("box overlap agrees with a dense point-sampling oracle") {
    Rng rng(2024);
    int overlapping = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Obb a{{rng.uniform(-2, 2), rng.uniform(-2, 2)},
                    Vec2::unit(rng.uniform(0, 2 * M_PI)),
                    rng.uniform(0.5, 2.5),
                    rng.uniform(0.3, 1.2)};
        const Obb b{{rng.uniform(-2, 2), rng.uniform(-2, 2)},
                    Vec2::unit(rng.uniform(0, 2 * M_PI)),
                    rng.uniform(0.5, 2.5),
                    rng.uniform(0.3, 1.2)};
        if (boxes_overlap_sampled(a, b, 60)) {
            CHECK(obb_overlap(a, b));  // no false negatives
            ++overlapping;
        }
    }
    CHECK(overlapping > 10);  // the sweep actually exercised overlap cases
}

TEST_CASE("disc-box overlap handles face, corner, and containment contact") {
    const Obb box{{0.0, 0.0}, {1.0, 0.0}, 2.0, 1.0};
    CHECK(disc_obb_overlap({0.0, 0.0}, 0.1, box));            // center inside
    CHECK(disc_obb_overlap({2.4, 0.0}, 0.5, box));            // face contact
    CHECK_FALSE(disc_obb_overlap({2.6, 0.0}, 0.5, box));      // face clear
    CHECK(disc_obb_overlap({2.2, 1.2}, 0.3, box));            // corner contact
    CHECK_FALSE(disc_obb_overlap({2.3, 1.3}, 0.3, box));      // corner clear
}

TEST_CASE("constant-velocity actors advance exactly linearly") {
    WorldState w = straight_road_world(0.0);
    ActorState ped;
    ped.kind = ActorKind::pedestrian;
    ped.position = {20.0, -3.0};
    ped.velocity = {0.0, 2.0};
    ped.footprint = Footprint::disc(kPedestrianRadius);
    w.actors.push_back(ped);

    for (int i = 1; i <= 10; ++i) {
        step_world(w, {0.0, 0.0});
        CHECK(w.actors[0].position.y == doctest::Approx(-3.0 + 2.0 * i * kTimestep).epsilon(1e-12));
        CHECK(w.actors[0].position.x == 20.0);
    }
}

TEST_CASE("empty world with zero action only advances the clock") {
    WorldState w = straight_road_world(0.0);
    const auto events = step_world(w, {0.0, 0.0});
    CHECK(events.empty());
    CHECK(w.time == doctest::Approx(kTimestep));
    CHECK(w.ego.position.x == 0.0);
}

TEST_CASE("pedestrian five meters ahead of the bumper is hit at about half a second") {
    const VehicleParams vp;
    WorldState w = straight_road_world(10.0);
    ActorState ped;
    ped.kind = ActorKind::pedestrian;
    // 5 m gap between the ego front face and the near edge of the disc.
    ped.position = {vp.half_length + 5.0 + kPedestrianRadius, 0.0};
    ped.footprint = Footprint::disc(kPedestrianRadius);
    w.actors.push_back(ped);

    std::vector<CollisionEvent> events;
    while (events.empty() && w.time < 2.0) {
        events = step_world(w, {0.0, 0.0});
    }
    REQUIRE(events.size() == 1);
    CHECK(std::abs(events[0].time - 0.5) <= kTimestep + 1e-12);
    CHECK(events[0].ego_speed_at_impact == doctest::Approx(10.0));
}

TEST_CASE("each actor collides at most once per episode") {
    WorldState w = straight_road_world(10.0);
    ActorState ped;
    ped.kind = ActorKind::pedestrian;
    ped.position = {3.0, 0.0};  // already overlapping after the first step
    ped.footprint = Footprint::disc(kPedestrianRadius);
    w.actors.push_back(ped);

    int total_events = 0;
    for (int i = 0; i < 30; ++i) total_events += static_cast<int>(step_world(w, {0.0, -1.0}).size());
    CHECK(total_events == 1);
    CHECK(w.actors[0].contacted);
}

TEST_CASE("delta-v splits by mass ratio and conserves momentum") {
    EgoState ego;
    ego.heading = 0.0;
    ego.speed = 20.0;

    ActorState car;
    car.kind = ActorKind::vehicle;
    car.velocity = {-10.0, 0.0};
    car.mass = 1500.0;

    const DeltaV head_on = compute_delta_v(ego, car, {-1.0, 0.0});
    CHECK(head_on.ego == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(head_on.other == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(head_on.ego * 3.6 == doctest::Approx(54.0).epsilon(1e-12));

    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        ActorState other;
        other.kind = ActorKind::vehicle;
        other.mass = rng.uniform(500.0, 3000.0);
        other.velocity = {rng.uniform(-20, 20), rng.uniform(-20, 20)};
        const Vec2 n = Vec2::unit(rng.uniform(0, 2 * M_PI));
        const DeltaV dv = compute_delta_v(ego, other, n);
        CHECK(1500.0 * dv.ego == doctest::Approx(other.mass * dv.other).epsilon(1e-9));
    }
}

TEST_CASE("static obstacles take the infinite-mass limit") {
    EgoState ego;
    ego.speed = 10.0;
    ActorState wall;
    wall.kind = ActorKind::static_obstacle;
    const DeltaV dv = compute_delta_v(ego, wall, {-1.0, 0.0});
    CHECK(dv.ego == doctest::Approx(10.0));
    CHECK(dv.other == 0.0);
}

TEST_CASE("equal velocities graze with zero delta-v") {
    EgoState ego;
    ego.speed = 7.0;
    ActorState other;
    other.kind = ActorKind::vehicle;
    other.velocity = {7.0, 0.0};
    const DeltaV dv = compute_delta_v(ego, other, {0.0, 1.0});
    CHECK(dv.ego == 0.0);
    CHECK(dv.other == 0.0);
}

TEST_CASE("lane departure uses a strict boundary") {
    WorldState w = straight_road_world(10.0);
    CHECK_FALSE(lane_departure(w));
    w.ego.position = {50.0, 2.0 * w.lane.half_width};
    CHECK(lane_departure(w));
    w.ego.position = {50.0, w.lane.half_width};
    CHECK_FALSE(lane_departure(w));  // exactly on the edge is still inside
    w.ego.position = {50.0, std::nextafter(w.lane.half_width, 10.0)};
    CHECK(lane_departure(w));
}

TEST_CASE("distance to a polyline centerline clamps to segment ends") {
    Lane lane;
    lane.centerline = {{0.0, 0.0}, {10.0, 0.0}, {10.0, 10.0}};
    CHECK(distance_to_centerline({5.0, 3.0}, lane) == doctest::Approx(3.0));
    CHECK(distance_to_centerline({12.0, 12.0}, lane) == doctest::Approx(std::sqrt(8.0)));
    CHECK(distance_to_centerline({-3.0, -4.0}, lane) == doctest::Approx(5.0));
    CHECK(distance_to_centerline({11.0, 5.0}, lane) == doctest::Approx(1.0));
}

TEST_CASE("identical state and actions give bit-identical trajectories") {
    const auto run = [] {
        WorldState w = straight_road_world(17.0);
        ActorState ped;
        ped.kind = ActorKind::pedestrian;
        ped.position = {40.0, -4.0};
        ped.velocity = {0.0, 1.3};
        ped.footprint = Footprint::disc(kPedestrianRadius);
        w.actors.push_back(ped);
        Rng rng(31337);
        for (int i = 0; i < 150; ++i) {
            step_world(w, {rng.uniform(-1, 1), rng.uniform(-1, 1)});
        }
        return w;
    };
    const WorldState a = run();
    const WorldState b = run();
    CHECK(a.ego.position.x == b.ego.position.x);
    CHECK(a.ego.position.y == b.ego.position.y);
    CHECK(a.ego.heading == b.ego.heading);
    CHECK(a.ego.speed == b.ego.speed);
    CHECK(a.actors[0].position.y == b.actors[0].position.y);
    CHECK(a.time == b.time);
}
