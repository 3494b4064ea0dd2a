#include "crashsim/eval.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "crashsim/injury.hpp"

namespace crashsim::eval {

LearnedPolicy::LearnedPolicy(worldmodel::Vae vae, worldmodel::RnnPredictor rnn,
                             nn::DenseNet actor)
    : vae_(std::move(vae)),
      rnn_(std::move(rnn)),
      actor_(std::move(actor)),
      perception_(vae_, rnn_) {
    if (actor_.input_size() != perception_.input_size()) {
        throw std::invalid_argument("learned policy: actor input does not match perception");
    }
}

void LearnedPolicy::reset() { perception_.reset(); }

sim::Action LearnedPolicy::decide(const sim::WorldState& world) {
    const nn::MatF obs = perception_.observe(world);
    const sim::Action action = rl::act(actor_, obs);
    perception_.note_action(action);
    return action;
}

EpisodeOutcome run_episode(const scenario::BuiltScenario& built, Policy& policy) {
    sim::WorldState world = built.world;
    policy.reset();

    EpisodeOutcome out;
    injury::CollisionLedger ledger;
    bool any_collision = false;

    while (!scenario::episode_complete(world, built.infractions)) {
        const sim::Action action = policy.decide(world);
        const std::vector<sim::CollisionEvent> events = sim::step_world(world, action);
        for (const sim::CollisionEvent& ev : events) {
            injury::apply_event(ledger, ev);
            if (!any_collision) {
                any_collision = true;
                out.impact_speed_ms = ev.ego_speed_at_impact;
            }
            switch (ev.target_kind) {
                case sim::ActorKind::pedestrian: out.collided_ped = true; break;
                case sim::ActorKind::vehicle: out.collided_veh = true; break;
                case sim::ActorKind::static_obstacle: out.collided_static = true; break;
            }
        }
        out.lane_departed = out.lane_departed || sim::lane_departure(world);
    }

    out.sum_ped_risk = ledger.summed_pedestrian_risk();
    out.sum_occ_risk = ledger.summed_occupant_risk();
    out.stopped = world.ego.speed == 0.0;
    return out;
}

std::vector<EpisodeOutcome> evaluate_bank(const scenario::ScenarioBank& bank,
                                          const PolicyFactory& make_policy, int jobs) {
    const std::size_t n = bank.entries.size();
    std::vector<EpisodeOutcome> outcomes(n);

    const auto run_stripe = [&](int offset, int stride) {
        std::unique_ptr<Policy> policy = make_policy();
        for (std::size_t i = static_cast<std::size_t>(offset); i < n;
             i += static_cast<std::size_t>(stride)) {
            const scenario::BuiltScenario built = scenario::build_world(bank.entries[i]);
            outcomes[i] = run_episode(built, *policy);
        }
    };

    if (jobs <= 1) {
        run_stripe(0, 1);
    } else {
        std::vector<std::thread> workers;
        for (int t = 0; t < jobs; ++t) workers.emplace_back(run_stripe, t, jobs);
        for (std::thread& w : workers) w.join();
    }
    return outcomes;
}

const CellMetrics* MetricsTable::find(double ttc, double speed) const {
    for (const CellMetrics& c : cells) {
        if (c.ttc == ttc && c.speed == speed) return &c;
    }
    return nullptr;
}

MetricsTable aggregate(const scenario::ScenarioBank& bank,
                       const std::vector<EpisodeOutcome>& outcomes) {
    if (bank.entries.size() != outcomes.size()) {
        throw std::invalid_argument("aggregate: outcome count does not match the bank");
    }
    MetricsTable table;
    for (double ttc : bank.grid.ttc_values) {
        for (double speed : bank.grid.speed_values) {
            CellMetrics cell;
            cell.ttc = ttc;
            cell.speed = speed;
            for (std::size_t i = 0; i < bank.entries.size(); ++i) {
                const scenario::ScenarioParams& p = bank.entries[i];
                if (p.ttc != ttc || p.collision_velocity != speed) continue;
                const EpisodeOutcome& o = outcomes[i];
                cell.count++;
                cell.ped_collision_rate += o.collided_ped ? 1.0 : 0.0;
                cell.veh_collision_rate += o.collided_veh ? 1.0 : 0.0;
                cell.static_collision_rate += o.collided_static ? 1.0 : 0.0;
                cell.mean_ped_risk += o.sum_ped_risk;
                cell.mean_occ_risk += o.sum_occ_risk;
                cell.lane_departure_rate += o.lane_departed ? 1.0 : 0.0;
                cell.stop_rate += o.stopped ? 1.0 : 0.0;
            }
            if (cell.count == 0) continue;  // empty cells are absent, not zero
            const double scale = 100.0 / cell.count;
            cell.ped_collision_rate *= scale;
            cell.veh_collision_rate *= scale;
            cell.static_collision_rate *= scale;
            cell.mean_ped_risk *= scale;
            cell.mean_occ_risk *= scale;
            cell.mean_total_risk = cell.mean_ped_risk + cell.mean_occ_risk;
            cell.lane_departure_rate *= scale;
            cell.stop_rate *= scale;
            table.cells.push_back(cell);
        }
    }
    return table;
}

MetricsTable compare(const MetricsTable& baseline, const MetricsTable& policy) {
    MetricsTable diff;
    for (const CellMetrics& b : baseline.cells) {
        const CellMetrics* p = policy.find(b.ttc, b.speed);
        if (!p) continue;
        CellMetrics d;
        d.ttc = b.ttc;
        d.speed = b.speed;
        d.count = b.count;
        d.ped_collision_rate = b.ped_collision_rate - p->ped_collision_rate;
        d.veh_collision_rate = b.veh_collision_rate - p->veh_collision_rate;
        d.static_collision_rate = b.static_collision_rate - p->static_collision_rate;
        d.mean_ped_risk = b.mean_ped_risk - p->mean_ped_risk;
        d.mean_occ_risk = b.mean_occ_risk - p->mean_occ_risk;
        d.mean_total_risk = b.mean_total_risk - p->mean_total_risk;
        d.lane_departure_rate = b.lane_departure_rate - p->lane_departure_rate;
        d.stop_rate = b.stop_rate - p->stop_rate;
        diff.cells.push_back(d);
    }
    return diff;
}

void write_outcomes_csv(const scenario::ScenarioBank& bank,
                        const std::vector<EpisodeOutcome>& outcomes, const std::string& path) {
    if (bank.entries.size() != outcomes.size()) {
        throw std::invalid_argument("outcomes csv: outcome count does not match the bank");
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write outcomes csv: " + path);
    f << "bank_index,ttc,speed,collided_ped,collided_veh,collided_static,"
         "impact_speed_ms,sum_ped_risk,sum_occ_risk,lane_departed,stopped\n";
    char buf[256];
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const scenario::ScenarioParams& p = bank.entries[i];
        const EpisodeOutcome& o = outcomes[i];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%d,%d,%d,%.17g,%.17g,%.17g,%d,%d\n", i,
                      p.ttc, p.collision_velocity, o.collided_ped ? 1 : 0, o.collided_veh ? 1 : 0,
                      o.collided_static ? 1 : 0, o.impact_speed_ms, o.sum_ped_risk, o.sum_occ_risk,
                      o.lane_departed ? 1 : 0, o.stopped ? 1 : 0);
        f << buf;
    }
}

void write_metrics_csv(const MetricsTable& table, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write metrics csv: " + path);
    f << "ttc,speed,count,ped_collision_rate,veh_collision_rate,static_collision_rate,"
         "mean_ped_risk,mean_occ_risk,mean_total_risk,lane_departure_rate,stop_rate\n";
    char buf[320];
    for (const CellMetrics& c : table.cells) {
        std::snprintf(buf, sizeof(buf),
                      "%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", c.ttc,
                      c.speed, c.count, c.ped_collision_rate, c.veh_collision_rate,
                      c.static_collision_rate, c.mean_ped_risk, c.mean_occ_risk, c.mean_total_risk,
                      c.lane_departure_rate, c.stop_rate);
        f << buf;
    }
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

double parse_double(const std::string& s, const std::string& path) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty())
        throw std::runtime_error("malformed number \"" + s + "\" in " + path);
    return v;
}

bool parse_flag(const std::string& s, const std::string& path) {
    if (s == "0") return false;
    if (s == "1") return true;
    throw std::runtime_error("malformed flag \"" + s + "\" in " + path);
}

void note_grid_value(std::vector<double>& values, double v) {
    for (const double existing : values)
        if (existing == v) return;
    values.push_back(v);
}

}  // namespace

OutcomeLog load_outcomes_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open outcome csv: " + path);
    std::string line;
    if (!std::getline(f, line) ||
        line !=
            "bank_index,ttc,speed,collided_ped,collided_veh,collided_static,"
            "impact_speed_ms,sum_ped_risk,sum_occ_risk,lane_departed,stopped")
        throw std::runtime_error("unrecognized outcome csv header in " + path);

    OutcomeLog log;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_row(line);
        if (fields.size() != 11)
            throw std::runtime_error("expected 11 columns in " + path + ", got " +
                                     std::to_string(fields.size()));
        scenario::ScenarioParams p;
        p.ttc = parse_double(fields[1], path);
        p.collision_velocity = parse_double(fields[2], path);
        log.bank.entries.push_back(p);
        note_grid_value(log.bank.grid.ttc_values, p.ttc);
        note_grid_value(log.bank.grid.speed_values, p.collision_velocity);

        EpisodeOutcome o;
        o.collided_ped = parse_flag(fields[3], path);
        o.collided_veh = parse_flag(fields[4], path);
        o.collided_static = parse_flag(fields[5], path);
        o.impact_speed_ms = parse_double(fields[6], path);
        o.sum_ped_risk = parse_double(fields[7], path);
        o.sum_occ_risk = parse_double(fields[8], path);
        o.lane_departed = parse_flag(fields[9], path);
        o.stopped = parse_flag(fields[10], path);
        log.outcomes.push_back(o);
    }
    return log;
}

}  // namespace crashsim::eval
