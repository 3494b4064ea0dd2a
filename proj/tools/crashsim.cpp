// Pipeline driver: collect driving data, train the world model (VAE + latent
// predictor), train mitigation policies, and evaluate them on scenario banks.
//
// Exit codes: 0 success, 1 usage error, 2 data/model error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crashsim/config.hpp"
#include "crashsim/eval.hpp"
#include "crashsim/rl.hpp"
#include "crashsim/rng.hpp"
#include "crashsim/scenario.hpp"
#include "crashsim/worldmodel.hpp"

namespace {

using namespace crashsim;

config::Config resolve_config(const std::string& path) {
    if (path.empty()) {
        config::Config cfg = config::default_config();
        config::apply_env_seed_override(cfg);
        return cfg;
    }
    return config::load_config(path);
}

void add_config_flag(CLI::App* cmd, std::string& path) {
    cmd->add_option("--config", path, "JSON config file (defaults built in)");
}

int run_collect(const std::string& config_path, int episodes, const std::string& out) {
    config::Config cfg = resolve_config(config_path);
    if (episodes > 0) cfg.collect.episodes = episodes;
    const worldmodel::FrameDataset ds =
        worldmodel::collect_dataset(cfg.collect.episodes, config::phase_seed(cfg, "collect"));
    worldmodel::save_dataset(ds, out);
    std::printf("collected %d frames over %zu episodes -> %s\n", ds.frame_count(),
                ds.episodes.size(), out.c_str());
    return 0;
}

int run_train_vae(const std::string& config_path, const std::string& data,
                  const std::string& out) {
    const config::Config cfg = resolve_config(config_path);
    const worldmodel::FrameDataset ds = worldmodel::load_dataset(data);

    Rng init_rng(config::phase_seed(cfg, "vae-init"));
    worldmodel::Vae vae = worldmodel::make_vae<float>(cfg.vae.latent_dim, cfg.vae.hidden, init_rng);
    worldmodel::VaeTrainConfig tc;
    tc.epochs = cfg.vae.epochs;
    tc.batch = cfg.vae.batch;
    tc.lr = static_cast<float>(cfg.vae.lr);
    tc.kl_weight = static_cast<float>(cfg.vae.kl_weight);
    tc.seed = config::phase_seed(cfg, "vae");
    const worldmodel::VaeTrainReport report = worldmodel::train_vae(vae, ds, tc);

    worldmodel::save_vae(vae, out);
    for (std::size_t e = 0; e < report.epoch_reconstruction.size(); ++e)
        std::printf("epoch %zu: reconstruction %.6f kl %.6f\n", e + 1,
                    report.epoch_reconstruction[e], report.epoch_kl[e]);
    std::printf("holdout accuracy %.4f (majority class %.4f) -> %s\n", report.holdout_accuracy,
                report.majority_class_fraction, out.c_str());
    return 0;
}

int run_train_rnn(const std::string& config_path, const std::string& data,
                  const std::string& vae_path, const std::string& out) {
    const config::Config cfg = resolve_config(config_path);
    const worldmodel::FrameDataset ds = worldmodel::load_dataset(data);
    worldmodel::Vae vae = worldmodel::load_vae(vae_path);

    const worldmodel::SequenceDataset seq = worldmodel::encode_dataset(vae, ds);
    Rng init_rng(config::phase_seed(cfg, "rnn-init"));
    worldmodel::RnnPredictor rnn =
        worldmodel::make_rnn<float>(vae.latent_dim, cfg.rnn.hidden, init_rng);
    worldmodel::RnnTrainConfig tc;
    tc.epochs = cfg.rnn.epochs;
    tc.batch = cfg.rnn.batch;
    tc.window = cfg.rnn.window;
    tc.lr = static_cast<float>(cfg.rnn.lr);
    tc.seed = config::phase_seed(cfg, "rnn");
    const worldmodel::RnnTrainReport report = worldmodel::train_rnn(rnn, seq, tc);

    worldmodel::save_rnn(rnn, out);
    for (std::size_t e = 0; e < report.epoch_mse.size(); ++e)
        std::printf("epoch %zu: mse %.8f\n", e + 1, report.epoch_mse[e]);
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int run_train_policy(const std::string& config_path, const std::string& reward,
                     const std::string& vae_path, const std::string& rnn_path, int episodes,
                     const std::string& out_dir) {
    const config::Config cfg = resolve_config(config_path);
    worldmodel::Vae vae = worldmodel::load_vae(vae_path);
    worldmodel::RnnPredictor rnn = worldmodel::load_rnn(rnn_path);

    rl::PolicyTrainConfig tc;
    tc.episodes = episodes > 0 ? episodes : cfg.policy.episodes;
    tc.warmup_steps = cfg.policy.warmup;
    tc.buffer_capacity = cfg.policy.buffer_capacity;
    tc.gamma = static_cast<float>(cfg.policy.gamma);
    tc.tau = static_cast<float>(cfg.policy.tau);
    tc.sigma_start = static_cast<float>(cfg.policy.sigma_start);
    tc.sigma_decay = static_cast<float>(cfg.policy.sigma_decay);
    tc.sigma_floor = static_cast<float>(cfg.policy.sigma_min);
    tc.actor_lr = static_cast<float>(cfg.policy.actor_lr);
    tc.critic_lr = static_cast<float>(cfg.policy.critic_lr);
    tc.hidden = cfg.policy.hidden;
    tc.reward = rl::reward_kind_from_name(reward);
    tc.seed = config::phase_seed(cfg, "policy-" + reward);

    const rl::PolicyTrainResult result = rl::train_policy(vae, rnn, tc);

    std::filesystem::create_directories(out_dir);
    rl::save_ddpg(result.agent, out_dir);
    worldmodel::save_vae(vae, out_dir + "/vae.json");
    worldmodel::save_rnn(rnn, out_dir + "/rnn.json");
    rl::write_training_log(result.log, out_dir + "/training_log.csv");
    {
        nlohmann::ordered_json state;
        state["format_version"] = 1;
        state["kind"] = "training_state";
        state["reward"] = reward;
        state["episodes"] = tc.episodes;
        state["seed"] = tc.seed;
        state["state_dim"] = result.agent.state_dim;
        std::ofstream f(out_dir + "/training_state.json", std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + out_dir + "/training_state.json");
        f << state.dump(2) << "\n";
    }

    double last_return = 0.0;
    if (!result.log.empty()) last_return = result.log.back().episode_return;
    std::printf("trained %s policy for %d episodes (final return %.4f) -> %s\n", reward.c_str(),
                tc.episodes, last_return, out_dir.c_str());
    return 0;
}

int run_bank(const std::string& config_path, std::uint64_t seed, bool seed_given,
             const std::string& out) {
    const config::Config cfg = resolve_config(config_path);
    const std::uint64_t bank_seed = seed_given ? seed : config::phase_seed(cfg, "bank");
    const scenario::ScenarioBank bank = scenario::build_test_bank(
        bank_seed, cfg.bank.ttc_values, cfg.bank.speed_values, cfg.bank.setups_per_cell);
    scenario::save_bank(bank, out);
    std::printf("bank of %zu scenarios (%zu ttc x %zu speed x %d setups) -> %s\n",
                bank.entries.size(), cfg.bank.ttc_values.size(), cfg.bank.speed_values.size(),
                cfg.bank.setups_per_cell, out.c_str());
    return 0;
}

int run_evaluate(const std::string& policy, const std::string& bank_path, const std::string& out,
                 int jobs) {
    const scenario::ScenarioBank bank = scenario::load_bank(bank_path);

    eval::PolicyFactory factory;
    if (policy == "baseline") {
        factory = [] { return std::make_unique<eval::BaselinePolicy>(); };
    } else {
        const worldmodel::Vae vae = worldmodel::load_vae(policy + "/vae.json");
        const worldmodel::RnnPredictor rnn = worldmodel::load_rnn(policy + "/rnn.json");
        const rl::Ddpg agent = rl::load_ddpg(policy);
        factory = [vae, rnn, actor = agent.actor_local] {
            return std::make_unique<eval::LearnedPolicy>(vae, rnn, actor);
        };
    }

    const std::vector<eval::EpisodeOutcome> outcomes = eval::evaluate_bank(bank, factory, jobs);
    eval::write_outcomes_csv(bank, outcomes, out);
    std::printf("evaluated %s on %zu scenarios -> %s\n", policy.c_str(), outcomes.size(),
                out.c_str());
    return 0;
}

int run_report(const std::string& results, const std::string& baseline, const std::string& out) {
    const eval::OutcomeLog policy_log = eval::load_outcomes_csv(results);
    const eval::OutcomeLog baseline_log = eval::load_outcomes_csv(baseline);

    const eval::MetricsTable policy_table = eval::aggregate(policy_log.bank, policy_log.outcomes);
    const eval::MetricsTable baseline_table =
        eval::aggregate(baseline_log.bank, baseline_log.outcomes);
    const eval::MetricsTable improvement = eval::compare(baseline_table, policy_table);

    std::filesystem::create_directories(out);
    eval::write_metrics_csv(policy_table, out + "/policy_metrics.csv");
    eval::write_metrics_csv(baseline_table, out + "/baseline_metrics.csv");
    eval::write_metrics_csv(improvement, out + "/improvement.csv");
    std::printf("wrote %s/{policy_metrics,baseline_metrics,improvement}.csv\n", out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D imminent-collision simulator and mitigation-policy pipeline"};
    app.require_subcommand(1);

    std::string cfg_path;

    auto* c_collect = app.add_subcommand("collect", "Record a lane-keeping frame dataset");
    std::string collect_out;
    int collect_episodes = 0;
    add_config_flag(c_collect, cfg_path);
    c_collect->add_option("--episodes", collect_episodes, "episode count (default from config)");
    c_collect->add_option("--out", collect_out, "output dataset file")->required();

    auto* c_vae = app.add_subcommand("train-vae", "Train the grid autoencoder");
    std::string vae_data, vae_out;
    add_config_flag(c_vae, cfg_path);
    c_vae->add_option("--data", vae_data, "frame dataset")->required();
    c_vae->add_option("--out", vae_out, "output model file")->required();

    auto* c_rnn = app.add_subcommand("train-rnn", "Train the latent-dynamics predictor");
    std::string rnn_data, rnn_vae, rnn_out;
    add_config_flag(c_rnn, cfg_path);
    c_rnn->add_option("--data", rnn_data, "frame dataset")->required();
    c_rnn->add_option("--vae", rnn_vae, "trained autoencoder")->required();
    c_rnn->add_option("--out", rnn_out, "output model file")->required();

    auto* c_policy = app.add_subcommand("train-policy", "Train a mitigation policy");
    std::string pol_reward = "r2", pol_vae, pol_rnn, pol_out;
    int pol_episodes = 0;
    add_config_flag(c_policy, cfg_path);
    c_policy->add_option("--reward", pol_reward, "reward shaping: r1 (counts) or r2 (risks)")
        ->check(CLI::IsMember({"r1", "r2"}));
    c_policy->add_option("--vae", pol_vae, "trained autoencoder")->required();
    c_policy->add_option("--rnn", pol_rnn, "trained predictor")->required();
    c_policy->add_option("--episodes", pol_episodes, "episode count (default from config)");
    c_policy->add_option("--out", pol_out, "output policy directory")->required();

    auto* c_bank = app.add_subcommand("bank", "Generate an evaluation scenario bank");
    std::string bank_out;
    std::uint64_t bank_seed = 0;
    add_config_flag(c_bank, cfg_path);
    CLI::Option* bank_seed_opt =
        c_bank->add_option("--seed", bank_seed, "bank seed (default derived from master seed)");
    c_bank->add_option("--out", bank_out, "output bank file")->required();

    auto* c_eval = app.add_subcommand("evaluate", "Score a policy on a scenario bank");
    std::string eval_policy, eval_bank, eval_out;
    int eval_jobs = 1;
    c_eval->add_option("--policy", eval_policy, "policy directory, or \"baseline\"")->required();
    c_eval->add_option("--bank", eval_bank, "scenario bank file")->required();
    c_eval->add_option("--out", eval_out, "output outcome csv")->required();
    c_eval->add_option("--jobs", eval_jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* c_report = app.add_subcommand("report", "Aggregate outcome csvs into metric tables");
    std::string rep_results, rep_baseline, rep_out;
    c_report->add_option("--results", rep_results, "policy outcome csv")->required();
    c_report->add_option("--baseline", rep_baseline, "baseline outcome csv")->required();
    c_report->add_option("--out", rep_out, "output directory")->required();

    auto* c_config = app.add_subcommand("config", "Inspect configuration");
    bool dump_defaults = false;
    c_config->add_flag("--dump-defaults", dump_defaults, "print the built-in defaults as JSON")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (c_collect->parsed()) return run_collect(cfg_path, collect_episodes, collect_out);
        if (c_vae->parsed()) return run_train_vae(cfg_path, vae_data, vae_out);
        if (c_rnn->parsed()) return run_train_rnn(cfg_path, rnn_data, rnn_vae, rnn_out);
        if (c_policy->parsed())
            return run_train_policy(cfg_path, pol_reward, pol_vae, pol_rnn, pol_episodes, pol_out);
        if (c_bank->parsed())
            return run_bank(cfg_path, bank_seed, bank_seed_opt->count() > 0, bank_out);
        if (c_eval->parsed()) return run_evaluate(eval_policy, eval_bank, eval_out, eval_jobs);
        if (c_report->parsed()) return run_report(rep_results, rep_baseline, rep_out);
        if (c_config->parsed()) {
            std::printf("%s\n", config::to_json(config::default_config()).dump(2).c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
