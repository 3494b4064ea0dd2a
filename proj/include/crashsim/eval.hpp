#ifndef CRASHSIM_EVAL_HPP
#define CRASHSIM_EVAL_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "crashsim/nn.hpp"
#include "crashsim/rl.hpp"
#include "crashsim/scenario.hpp"
#include "crashsim/sim.hpp"
#include "crashsim/worldmodel.hpp"

namespace crashsim::eval {

// A closed-loop controller under test. reset() is called once per episode.
class Policy {
  public:
    virtual ~Policy() = default;
    virtual void reset() = 0;
    virtual sim::Action decide(const sim::WorldState& world) = 0;
};

// The comparison baseline: hold the wheel straight and brake as hard as the
// vehicle allows, every step.
class BaselinePolicy : public Policy {
  public:
    void reset() override {}
    sim::Action decide(const sim::WorldState&) override { return {0.0, -1.0}; }
};

// Greedy learned controller: VAE + latent predictor perception feeding the
// trained actor. Owns copies of the networks so instances can run on
// separate threads.
class LearnedPolicy : public Policy {
  public:
    LearnedPolicy(worldmodel::Vae vae, worldmodel::RnnPredictor rnn, nn::DenseNet actor);
    LearnedPolicy(const LearnedPolicy&) = delete;
    LearnedPolicy& operator=(const LearnedPolicy&) = delete;

    void reset() override;
    sim::Action decide(const sim::WorldState& world) override;

  private:
    worldmodel::Vae vae_;
    worldmodel::RnnPredictor rnn_;
    nn::DenseNet actor_;
    rl::Perception perception_;
};

// What one scored episode produced. Risks are summed over the episode's
// collision ledger (fractions, not percent).
struct EpisodeOutcome {
    bool collided_ped = false;
    bool collided_veh = false;
    bool collided_static = false;
    double impact_speed_ms = 0.0;  // ego speed at the first collision, 0 if none
    double sum_ped_risk = 0.0;
    double sum_occ_risk = 0.0;
    bool lane_departed = false;    // ego center ever left the lane
    bool stopped = false;          // at rest when the episode ended
};

// Rolls the world to termination under the policy, scoring collisions
// through the injury ledger.
EpisodeOutcome run_episode(const scenario::BuiltScenario& built, Policy& policy);

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

// Runs every bank entry (jobs > 1: striped across threads, each with its own
// policy instance). Outcome order always matches the entry order.
std::vector<EpisodeOutcome> evaluate_bank(const scenario::ScenarioBank& bank,
                                          const PolicyFactory& make_policy, int jobs = 1);

// Per-(ttc, speed) aggregates, in percent.
struct CellMetrics {
    double ttc = 0.0;
    double speed = 0.0;
    int count = 0;
    double ped_collision_rate = 0.0;
    double veh_collision_rate = 0.0;
    double static_collision_rate = 0.0;
    double mean_ped_risk = 0.0;
    double mean_occ_risk = 0.0;
    double mean_total_risk = 0.0;
    double lane_departure_rate = 0.0;
    double stop_rate = 0.0;
};

struct MetricsTable {
    std::vector<CellMetrics> cells;  // grid order; cells without episodes are absent

    const CellMetrics* find(double ttc, double speed) const;
};

MetricsTable aggregate(const scenario::ScenarioBank& bank,
                       const std::vector<EpisodeOutcome>& outcomes);

// Cellwise improvement, baseline minus policy, over cells present in both.
MetricsTable compare(const MetricsTable& baseline, const MetricsTable& policy);

void write_outcomes_csv(const scenario::ScenarioBank& bank,
                        const std::vector<EpisodeOutcome>& outcomes, const std::string& path);
void write_metrics_csv(const MetricsTable& table, const std::string& path);

// Reads an outcome CSV back for offline aggregation. The reconstructed bank
// carries each row's (ttc, speed) and a grid listing the distinct values in
// first-appearance order; %.17g round-trips doubles exactly, so aggregate()
// on the result recovers the original tables. Malformed files throw.
struct OutcomeLog {
    scenario::ScenarioBank bank;
    std::vector<EpisodeOutcome> outcomes;
};

OutcomeLog load_outcomes_csv(const std::string& path);

}  // namespace crashsim::eval

#endif
