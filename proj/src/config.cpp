#include "crashsim/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "crashsim/rng.hpp"
#include "crashsim/sim.hpp"

namespace crashsim::config {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kConfigVersion = 1;
constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

[[noreturn]] void fail(const std::string& what) {
    throw std::runtime_error("config: " + what);
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& scope) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) fail("unknown key \"" + scope + item.key() + "\"");
    }
}

void read_int(const json& obj, const char* key, const std::string& scope, int& into) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail("\"" + scope + key + "\" must be an integer");
    into = v.get<int>();
}

void read_double(const json& obj, const char* key, const std::string& scope, double& into) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number()) fail("\"" + scope + key + "\" must be a number");
    into = v.get<double>();
}

void require_range(bool ok, const std::string& what) {
    if (!ok) fail(what);
}

SimConfig built_in_sim() {
    const sim::VehicleParams vp;
    SimConfig s;
    s.dt = sim::kTimestep;
    s.wheelbase = vp.wheelbase;
    s.max_steer_deg = vp.max_steer * kRadToDeg;
    s.brake_max = vp.brake_max;
    s.throttle_max = vp.throttle_max;
    s.half_length = vp.half_length;
    s.half_width = vp.half_width;
    s.mass = vp.mass;
    return s;
}

void parse_sim(const json& obj, SimConfig& into) {
    reject_unknown_keys(obj,
                        {"dt", "wheelbase", "max_steer_deg", "brake_max", "throttle_max",
                         "half_length", "half_width", "mass"},
                        "sim.");
    SimConfig given = into;
    read_double(obj, "dt", "sim.", given.dt);
    read_double(obj, "wheelbase", "sim.", given.wheelbase);
    read_double(obj, "max_steer_deg", "sim.", given.max_steer_deg);
    read_double(obj, "brake_max", "sim.", given.brake_max);
    read_double(obj, "throttle_max", "sim.", given.throttle_max);
    read_double(obj, "half_length", "sim.", given.half_length);
    read_double(obj, "half_width", "sim.", given.half_width);
    read_double(obj, "mass", "sim.", given.mass);
    const SimConfig fixed = built_in_sim();
    const bool same = given.dt == fixed.dt && given.wheelbase == fixed.wheelbase &&
                      given.max_steer_deg == fixed.max_steer_deg &&
                      given.brake_max == fixed.brake_max &&
                      given.throttle_max == fixed.throttle_max &&
                      given.half_length == fixed.half_length &&
                      given.half_width == fixed.half_width && given.mass == fixed.mass;
    if (!same) fail("sim constants are fixed in this build and cannot be overridden");
    into = given;
}

void parse_collect(const json& obj, CollectConfig& into) {
    reject_unknown_keys(obj, {"episodes"}, "collect.");
    read_int(obj, "episodes", "collect.", into.episodes);
    require_range(into.episodes > 0, "collect.episodes must be positive");
}

void parse_vae(const json& obj, VaeConfig& into) {
    reject_unknown_keys(obj, {"latent_dim", "hidden", "epochs", "batch", "lr", "kl_weight"},
                        "vae.");
    read_int(obj, "latent_dim", "vae.", into.latent_dim);
    read_int(obj, "hidden", "vae.", into.hidden);
    read_int(obj, "epochs", "vae.", into.epochs);
    read_int(obj, "batch", "vae.", into.batch);
    read_double(obj, "lr", "vae.", into.lr);
    read_double(obj, "kl_weight", "vae.", into.kl_weight);
    require_range(into.latent_dim > 0, "vae.latent_dim must be positive");
    require_range(into.hidden > 0, "vae.hidden must be positive");
    require_range(into.epochs > 0, "vae.epochs must be positive");
    require_range(into.batch > 0, "vae.batch must be positive");
    require_range(into.lr > 0.0, "vae.lr must be positive");
    require_range(into.kl_weight >= 0.0, "vae.kl_weight must be non-negative");
}

void parse_rnn(const json& obj, RnnConfig& into) {
    reject_unknown_keys(obj, {"hidden", "epochs", "batch", "window", "lr"}, "rnn.");
    read_int(obj, "hidden", "rnn.", into.hidden);
    read_int(obj, "epochs", "rnn.", into.epochs);
    read_int(obj, "batch", "rnn.", into.batch);
    read_int(obj, "window", "rnn.", into.window);
    read_double(obj, "lr", "rnn.", into.lr);
    require_range(into.hidden > 0, "rnn.hidden must be positive");
    require_range(into.epochs > 0, "rnn.epochs must be positive");
    require_range(into.batch > 0, "rnn.batch must be positive");
    require_range(into.window > 1, "rnn.window must be at least 2");
    require_range(into.lr > 0.0, "rnn.lr must be positive");
}

void parse_policy(const json& obj, PolicyConfig& into) {
    reject_unknown_keys(obj,
                        {"episodes", "warmup", "buffer_capacity", "gamma", "tau", "actor_lr",
                         "critic_lr", "sigma_start", "sigma_decay", "sigma_min", "hidden"},
                        "policy.");
    read_int(obj, "episodes", "policy.", into.episodes);
    read_int(obj, "warmup", "policy.", into.warmup);
    read_int(obj, "buffer_capacity", "policy.", into.buffer_capacity);
    read_double(obj, "gamma", "policy.", into.gamma);
    read_double(obj, "tau", "policy.", into.tau);
    read_double(obj, "actor_lr", "policy.", into.actor_lr);
    read_double(obj, "critic_lr", "policy.", into.critic_lr);
    read_double(obj, "sigma_start", "policy.", into.sigma_start);
    read_double(obj, "sigma_decay", "policy.", into.sigma_decay);
    read_double(obj, "sigma_min", "policy.", into.sigma_min);
    if (obj.contains("hidden")) {
        const json& h = obj.at("hidden");
        if (!h.is_array() || h.empty()) fail("\"policy.hidden\" must be a non-empty array");
        into.hidden.clear();
        for (const json& v : h) {
            if (!v.is_number_integer() || v.get<int>() <= 0)
                fail("\"policy.hidden\" entries must be positive integers");
            into.hidden.push_back(v.get<int>());
        }
    }
    require_range(into.episodes > 0, "policy.episodes must be positive");
    require_range(into.warmup >= 0, "policy.warmup must be non-negative");
    require_range(into.buffer_capacity > 0, "policy.buffer_capacity must be positive");
    require_range(into.gamma > 0.0 && into.gamma <= 1.0, "policy.gamma must be in (0, 1]");
    require_range(into.tau > 0.0 && into.tau <= 1.0, "policy.tau must be in (0, 1]");
    require_range(into.actor_lr > 0.0, "policy.actor_lr must be positive");
    require_range(into.critic_lr > 0.0, "policy.critic_lr must be positive");
    require_range(into.sigma_start >= 0.0, "policy.sigma_start must be non-negative");
    require_range(into.sigma_decay > 0.0 && into.sigma_decay <= 1.0,
                  "policy.sigma_decay must be in (0, 1]");
    require_range(into.sigma_min >= 0.0, "policy.sigma_min must be non-negative");
}

void parse_bank(const json& obj, BankConfig& into) {
    reject_unknown_keys(obj, {"ttc_values", "speed_values", "setups_per_cell"}, "bank.");
    if (obj.contains("ttc_values")) {
        const json& t = obj.at("ttc_values");
        if (!t.is_array() || t.empty()) fail("\"bank.ttc_values\" must be a non-empty array");
        into.ttc_values.clear();
        for (const json& v : t) {
            if (!v.is_number() || v.get<double>() <= 0.0)
                fail("\"bank.ttc_values\" entries must be positive numbers");
            into.ttc_values.push_back(v.get<double>());
        }
    }
    if (obj.contains("speed_values")) {
        const json& s = obj.at("speed_values");
        if (!s.is_array() || s.empty()) fail("\"bank.speed_values\" must be a non-empty array");
        into.speed_values.clear();
        for (const json& v : s) {
            if (!v.is_number() || v.get<double>() <= 0.0)
                fail("\"bank.speed_values\" entries must be positive numbers");
            into.speed_values.push_back(v.get<double>());
        }
    }
    read_int(obj, "setups_per_cell", "bank.", into.setups_per_cell);
    require_range(into.setups_per_cell > 0, "bank.setups_per_cell must be positive");
}

// FNV-1a, to turn a phase name into a stable 64-bit tag.
std::uint64_t phase_tag(std::string_view phase) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : phase) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Config default_config() {
    Config cfg;
    cfg.sim = built_in_sim();
    return cfg;
}

ordered_json to_json(const Config& cfg) {
    ordered_json j;
    j["config_version"] = kConfigVersion;
    j["master_seed"] = cfg.master_seed;
    j["sim"] = {{"dt", cfg.sim.dt},
                {"wheelbase", cfg.sim.wheelbase},
                {"max_steer_deg", cfg.sim.max_steer_deg},
                {"brake_max", cfg.sim.brake_max},
                {"throttle_max", cfg.sim.throttle_max},
                {"half_length", cfg.sim.half_length},
                {"half_width", cfg.sim.half_width},
                {"mass", cfg.sim.mass}};
    j["collect"] = {{"episodes", cfg.collect.episodes}};
    j["vae"] = {{"latent_dim", cfg.vae.latent_dim}, {"hidden", cfg.vae.hidden},
                {"epochs", cfg.vae.epochs},         {"batch", cfg.vae.batch},
                {"lr", cfg.vae.lr},                 {"kl_weight", cfg.vae.kl_weight}};
    j["rnn"] = {{"hidden", cfg.rnn.hidden},
                {"epochs", cfg.rnn.epochs},
                {"batch", cfg.rnn.batch},
                {"window", cfg.rnn.window},
                {"lr", cfg.rnn.lr}};
    j["policy"] = {{"episodes", cfg.policy.episodes},
                   {"warmup", cfg.policy.warmup},
                   {"buffer_capacity", cfg.policy.buffer_capacity},
                   {"gamma", cfg.policy.gamma},
                   {"tau", cfg.policy.tau},
                   {"actor_lr", cfg.policy.actor_lr},
                   {"critic_lr", cfg.policy.critic_lr},
                   {"sigma_start", cfg.policy.sigma_start},
                   {"sigma_decay", cfg.policy.sigma_decay},
                   {"sigma_min", cfg.policy.sigma_min},
                   {"hidden", cfg.policy.hidden}};
    j["bank"] = {{"ttc_values", cfg.bank.ttc_values},
                 {"speed_values", cfg.bank.speed_values},
                 {"setups_per_cell", cfg.bank.setups_per_cell}};
    return j;
}

Config config_from_json(const json& j) {
    if (!j.is_object()) fail("top level must be a JSON object");
    if (!j.contains("config_version")) fail("missing required key \"config_version\"");
    if (!j.at("config_version").is_number_integer() ||
        j.at("config_version").get<int>() != kConfigVersion)
        fail("unsupported config_version (expected " + std::to_string(kConfigVersion) + ")");
    reject_unknown_keys(
        j, {"config_version", "master_seed", "sim", "collect", "vae", "rnn", "policy", "bank"},
        "");

    Config cfg = default_config();
    if (j.contains("master_seed")) {
        const json& v = j.at("master_seed");
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            fail("\"master_seed\" must be a non-negative integer");
        cfg.master_seed = v.get<std::uint64_t>();
    }
    if (j.contains("sim")) parse_sim(j.at("sim"), cfg.sim);
    if (j.contains("collect")) parse_collect(j.at("collect"), cfg.collect);
    if (j.contains("vae")) parse_vae(j.at("vae"), cfg.vae);
    if (j.contains("rnn")) parse_rnn(j.at("rnn"), cfg.rnn);
    if (j.contains("policy")) parse_policy(j.at("policy"), cfg.policy);
    if (j.contains("bank")) parse_bank(j.at("bank"), cfg.bank);
    return cfg;
}

void apply_env_seed_override(Config& cfg) {
    const char* env = std::getenv("CRASHSIM_SEED");
    if (env == nullptr) return;
    const std::string_view text(env);
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        fail("CRASHSIM_SEED is not an unsigned integer: \"" + std::string(text) + "\"");
    cfg.master_seed = seed;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open \"" + path + "\"");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail("\"" + path + "\" is not valid JSON: " + e.what());
    }
    Config cfg = config_from_json(j);
    apply_env_seed_override(cfg);
    return cfg;
}

std::uint64_t phase_seed(const Config& cfg, std::string_view phase) {
    std::uint64_t state = cfg.master_seed ^ phase_tag(phase);
    return splitmix64(state);
}

}  // namespace crashsim::config
