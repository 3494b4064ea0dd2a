#pragma once

// Run configuration for the pipeline tools. JSON on disk, strict on input:
// `config_version` is required, unknown keys are rejected, and every value is
// range-checked. Any block or key may be omitted and falls back to the
// defaults below, so a config file only needs to name what it changes.
//
// The `sim` block documents this build's physical constants (timestep and
// ego geometry). They are compiled in; a config that tries to change them is
// rejected rather than silently ignored.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace crashsim::config {

struct SimConfig {
    double dt = 0.0;            // s (filled from build constants)
    double wheelbase = 0.0;     // m
    double max_steer_deg = 0.0; // degrees
    double brake_max = 0.0;     // m/s^2
    double throttle_max = 0.0;  // m/s^2
    double half_length = 0.0;   // m
    double half_width = 0.0;    // m
    double mass = 0.0;          // kg
};

struct CollectConfig {
    int episodes = 300;  // driving episodes recorded into the frame dataset
};

struct VaeConfig {
    int latent_dim = 32;
    int hidden = 128;
    int epochs = 2;
    int batch = 32;
    double lr = 1e-4;
    double kl_weight = 1e-3;
};

struct RnnConfig {
    int hidden = 128;
    int epochs = 10;
    int batch = 32;   // windows per update
    int window = 16;  // truncated-BPTT length
    double lr = 1e-4;
};

struct PolicyConfig {
    int episodes = 2000;
    int warmup = 1000;           // env steps before updates begin
    int buffer_capacity = 100000;
    double gamma = 0.99;
    double tau = 0.005;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double sigma_start = 0.3;    // exploration noise schedule
    double sigma_decay = 0.999;  // per-episode multiplier
    double sigma_min = 0.05;
    std::vector<int> hidden = {256, 128};  // actor and critic layer widths
};

struct BankConfig {
    std::vector<double> ttc_values = {0.5, 0.75, 1.0, 1.5};   // s
    std::vector<double> speed_values = {10.0, 20.0, 30.0};    // m/s
    int setups_per_cell = 17;
};

struct Config {
    std::uint64_t master_seed = 1;
    SimConfig sim;
    CollectConfig collect;
    VaeConfig vae;
    RnnConfig rnn;
    PolicyConfig policy;
    BankConfig bank;
};

// Defaults with the sim block populated from the compiled constants.
Config default_config();

nlohmann::ordered_json to_json(const Config& cfg);

// Strict parse: throws std::runtime_error with a one-line cause on a missing
// or wrong config_version, unknown keys, type mismatches, or out-of-range
// values.
Config config_from_json(const nlohmann::json& j);

// Replaces master_seed with CRASHSIM_SEED when that variable is set; throws
// if it is set but not an unsigned integer.
void apply_env_seed_override(Config& cfg);

// Reads and parses a config file, then applies the CRASHSIM_SEED environment
// override (if set) to master_seed. A missing file or an unparsable override
// throws.
Config load_config(const std::string& path);

// Deterministic per-phase seed fan-out from the master seed, so each pipeline
// phase ("collect", "vae", "rnn", "policy-r1", ...) can be rerun on its own.
std::uint64_t phase_seed(const Config& cfg, std::string_view phase);

}  // namespace crashsim::config
