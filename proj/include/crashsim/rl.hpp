#ifndef CRASHSIM_RL_HPP
#define CRASHSIM_RL_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crashsim/injury.hpp"
#include "crashsim/nn.hpp"
#include "crashsim/rng.hpp"
#include "crashsim/scenario.hpp"
#include "crashsim/sim.hpp"
#include "crashsim/worldmodel.hpp"

namespace crashsim::rl {

// Which per-collision cost the agent is trained against: r1 counts heads,
// r2 weighs injury risk.
enum class RewardKind { r1, r2 };

const char* reward_kind_name(RewardKind k);
RewardKind reward_kind_from_name(const std::string& name);

// Reward increment contributed by one collision event; always <= 0.
double event_reward(const sim::CollisionEvent& event, RewardKind kind);

constexpr double kSpeedNorm = 30.0;  // m/s, the top of the sampled speed range

// Controller observation: [z; predicted next z; speed / 30], one column per
// sample.
int controller_input_size(int latent_dim);
nn::MatF assemble_input(const nn::MatF& z, const nn::MatF& z_pred, double speed_ms);

// Recurrent perception harness shared by training and deployment: rasterize,
// encode with the VAE mean, advance the latent predictor with the previously
// executed action (zero right after reset).
class Perception {
  public:
    Perception(worldmodel::Vae& vae, worldmodel::RnnPredictor& rnn);

    void reset();
    nn::MatF observe(const sim::WorldState& world);
    void note_action(const sim::Action& a);

    int input_size() const { return controller_input_size(vae_->latent_dim); }

  private:
    worldmodel::Vae* vae_;
    worldmodel::RnnPredictor* rnn_;
    worldmodel::RnnState state_;
    nn::MatF prev_action_;
};

// ---------------------------------------------------------------------------
// Replay storage.

struct Transition {
    nn::MatF state;       // input_size x 1
    nn::MatF next_state;  // input_size x 1
    sim::Action action;
    double reward = 0.0;  // <= 0 by construction
    bool terminal = false;
};

template <typename S>
struct BatchT {
    nn::Mat<S> states;        // D x B
    nn::Mat<S> actions;       // 2 x B
    nn::Mat<S> rewards;       // 1 x B
    nn::Mat<S> next_states;   // D x B
    nn::Mat<S> not_terminal;  // 1 x B, zero where the episode ended
};
using Batch = BatchT<float>;

class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity);

    // FIFO: once full, the oldest transition is overwritten. Rejects positive
    // rewards (costs only).
    void add(Transition t);

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }

    // Logical indexing, 0 = oldest surviving transition.
    const Transition& at(std::size_t i) const;

    std::vector<std::size_t> sample_indices(int batch, Rng& rng) const;
    Batch gather(const std::vector<std::size_t>& indices) const;
    Batch sample(int batch, Rng& rng) const { return gather(sample_indices(batch, rng)); }

  private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // slot the next overwrite lands on once full
    std::vector<Transition> data_;
};

// ---------------------------------------------------------------------------
// DDPG: deterministic actor, action-value critic, target copies of both.

template <typename S>
struct DdpgT {
    int state_dim = 0;
    S gamma = S(0.99);
    S tau = S(0.005);
    nn::DenseNetT<S> actor_local;    // state -> 2, tanh heads
    nn::DenseNetT<S> actor_target;
    nn::DenseNetT<S> critic_local;   // [state; action] -> 1
    nn::DenseNetT<S> critic_target;
    nn::AdamT<S> actor_opt;
    nn::AdamT<S> critic_opt;
};
using Ddpg = DdpgT<float>;

template <typename S>
DdpgT<S> make_ddpg(int state_dim, Rng& rng, S actor_lr = S(1e-4), S critic_lr = S(1e-3),
                   const std::vector<int>& hidden = {256, 128}) {
    DdpgT<S> d;
    d.state_dim = state_dim;

    std::vector<int> actor_sizes{state_dim};
    std::vector<int> critic_sizes{state_dim + 2};
    std::vector<nn::Activation> acts;
    for (int h : hidden) {
        actor_sizes.push_back(h);
        critic_sizes.push_back(h);
        acts.push_back(nn::Activation::relu);
    }
    actor_sizes.push_back(2);
    critic_sizes.push_back(1);

    std::vector<nn::Activation> actor_acts = acts;
    actor_acts.push_back(nn::Activation::tanh);
    std::vector<nn::Activation> critic_acts = acts;
    critic_acts.push_back(nn::Activation::identity);

    d.actor_local = nn::make_dense<S>(actor_sizes, actor_acts, rng);
    d.critic_local = nn::make_dense<S>(critic_sizes, critic_acts, rng);
    // Re-draw the output layers tiny so initial actions and values sit near
    // zero. Xavier-scale pre-tanh activations start the actor saturated, and
    // saturation is absorbing: tanh' ~ 0 there, so the policy can rail at
    // +/-1 before the critic knows anything and never recover.
    const auto tiny_head = [&rng](nn::DenseNetT<S>& net) {
        nn::Mat<S>& w = net.layers.back().w;
        for (int c = 0; c < w.cols(); ++c) {
            for (int r = 0; r < w.rows(); ++r) {
                w(r, c) = static_cast<S>(rng.uniform(-3e-3, 3e-3));
            }
        }
    };
    tiny_head(d.actor_local);
    tiny_head(d.critic_local);
    d.actor_target = d.actor_local;  // targets start as exact copies
    d.critic_target = d.critic_local;
    d.actor_opt.lr = actor_lr;
    d.critic_opt.lr = critic_lr;
    return d;
}

template <typename S>
nn::Mat<S> vstack(const nn::Mat<S>& top, const nn::Mat<S>& bottom) {
    nn::Mat<S> out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

template <typename S>
struct LossGrads {
    S loss = S(0);
    std::vector<nn::Mat<S>> grads;  // aligned with dense_params of the trained net
};

// TD(0) critic regression against the frozen targets:
// y = r + gamma * (1 - terminal) * Q_target(s', actor_target(s')). Terminal
// transitions never bootstrap.
template <typename S>
LossGrads<S> critic_loss_grads(DdpgT<S>& d, const BatchT<S>& batch) {
    const S B = static_cast<S>(batch.states.cols());
    const nn::Mat<S> a_next = nn::forward(d.actor_target, batch.next_states);
    const nn::Mat<S> q_next = nn::forward(d.critic_target, vstack(batch.next_states, a_next));
    const nn::Mat<S> y =
        batch.rewards + d.gamma * batch.not_terminal.cwiseProduct(q_next);
    const nn::Mat<S> q = nn::forward(d.critic_local, vstack(batch.states, batch.actions));
    const nn::Mat<S> diff = q - y;

    LossGrads<S> out;
    out.loss = diff.squaredNorm() / B;
    const nn::DenseGradsT<S> g = nn::backward(d.critic_local, nn::Mat<S>(diff * (S(2) / B)));
    out.grads = nn::dense_grad_list(g);
    return out;
}

template <typename S>
S critic_update(DdpgT<S>& d, const BatchT<S>& batch) {
    LossGrads<S> lg = critic_loss_grads(d, batch);
    d.critic_opt.step(nn::dense_params(d.critic_local), lg.grads);
    return lg.loss;
}

// Q and dQ/da of the local critic, columnwise. The generic critic interface
// lets tests drive the actor with a closed-form critic.
template <typename S>
std::pair<nn::Mat<S>, nn::Mat<S>> local_critic_q(DdpgT<S>& d, const nn::Mat<S>& states,
                                                 const nn::Mat<S>& actions) {
    nn::Mat<S> q = nn::forward(d.critic_local, vstack(states, actions));
    const nn::DenseGradsT<S> g =
        nn::backward(d.critic_local, nn::Mat<S>(nn::Mat<S>::Ones(1, states.cols())));
    return {std::move(q), nn::Mat<S>(g.dinput.bottomRows(2))};
}

// Deterministic policy gradient on -mean Q: the critic's action gradient is
// chained through the actor. critic(states, actions) must return
// (q: 1 x B, dq/da: 2 x B).
template <typename S, typename CriticFn>
LossGrads<S> actor_objective_grads(DdpgT<S>& d, const nn::Mat<S>& states, CriticFn&& critic) {
    const S B = static_cast<S>(states.cols());
    const nn::Mat<S> actions = nn::forward(d.actor_local, states);
    auto [q, dqda] = critic(states, actions);
    LossGrads<S> out;
    out.loss = -q.sum() / B;
    const nn::DenseGradsT<S> g = nn::backward(d.actor_local, nn::Mat<S>(-dqda / B));
    out.grads = nn::dense_grad_list(g);
    return out;
}

template <typename S, typename CriticFn>
S actor_update(DdpgT<S>& d, const nn::Mat<S>& states, CriticFn&& critic) {
    LossGrads<S> lg = actor_objective_grads(d, states, critic);
    d.actor_opt.step(nn::dense_params(d.actor_local), lg.grads);
    return lg.loss;
}

template <typename S>
S actor_update(DdpgT<S>& d, const nn::Mat<S>& states) {
    return actor_update(d, states, [&d](const nn::Mat<S>& s, const nn::Mat<S>& a) {
        return local_critic_q(d, s, a);
    });
}

template <typename S>
void soft_update_ddpg(DdpgT<S>& d) {
    nn::soft_update(d.actor_target, d.actor_local, d.tau);
    nn::soft_update(d.critic_target, d.critic_local, d.tau);
}

// Greedy action plus optional Gaussian exploration noise, clamped to the
// unit action box.
sim::Action act(nn::DenseNet& actor, const nn::MatF& state, double sigma = 0.0,
                Rng* rng = nullptr);

// ---------------------------------------------------------------------------
// Training.

struct PolicyTrainConfig {
    int episodes = 2000;
    int warmup_steps = 1000;   // transitions gathered before updates begin
    int batch = 32;
    int buffer_capacity = 100000;
    float gamma = 0.99f;
    float tau = 0.005f;
    float sigma_start = 0.3f;
    float sigma_decay = 0.999f;  // per episode
    float sigma_floor = 0.05f;
    // The actor moves an order of magnitude slower than the critic. With a
    // matched 1e-4 the policy outruns its value estimate and rails the tanh
    // heads at +/-1 — an absorbing state, since saturation kills the gradient.
    float actor_lr = 3e-5f;
    float critic_lr = 1e-3f;
    std::vector<int> hidden = {256, 128};  // actor and critic layer widths
    RewardKind reward = RewardKind::r2;
    std::uint64_t seed = 0;
};

struct EpisodeLogRow {
    int episode = 0;
    double episode_return = 0.0;
    int n_ped_collisions = 0;
    int n_car_collisions = 0;
    int n_static_collisions = 0;
    double sigma = 0.0;
};

struct PolicyTrainResult {
    Ddpg agent;
    std::vector<EpisodeLogRow> log;
};

// Runs seeded scenarios end to end: observe, act with decaying noise, step,
// store the transition, and after warmup do one critic update, one actor
// update and one soft target update per environment step.
PolicyTrainResult train_policy(worldmodel::Vae& vae, worldmodel::RnnPredictor& rnn,
                               const PolicyTrainConfig& cfg);

void write_training_log(const std::vector<EpisodeLogRow>& log, const std::string& path);

// Four model files (actor/critic, local/target) inside dir.
void save_ddpg(const Ddpg& agent, const std::string& dir);
Ddpg load_ddpg(const std::string& dir);

}  // namespace crashsim::rl

#endif
