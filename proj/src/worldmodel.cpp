#include "crashsim/worldmodel.hpp"

#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "crashsim/scenario.hpp"
#include "json.hpp"

namespace crashsim::worldmodel {

using sim::Vec2;

int class_priority(CellClass c) {
    switch (c) {
        case CellClass::none: return 0;
        case CellClass::road: return 1;
        case CellClass::sidewalk: return 2;
        case CellClass::static_obstacle: return 3;
        case CellClass::vehicle: return 4;
        case CellClass::pedestrian: return 5;
    }
    return 0;
}

namespace {

CellClass class_of(sim::ActorKind kind) {
    switch (kind) {
        case sim::ActorKind::pedestrian: return CellClass::pedestrian;
        case sim::ActorKind::vehicle: return CellClass::vehicle;
        case sim::ActorKind::static_obstacle: return CellClass::static_obstacle;
    }
    return CellClass::none;
}

// Cell (r, c) spans forward in [31-r, 32-r] and lateral (left-positive) in
// [15-c, 16-c], both in the ego frame.
sim::Obb cell_rect(int r, int c) {
    return {{31.5 - r, 15.5 - c}, {1.0, 0.0}, 0.5, 0.5};
}

void stamp(ObservationGrid& grid, int r, int c, CellClass cls) {
    std::uint8_t& cell = grid.at(r, c);
    if (class_priority(cls) > class_priority(static_cast<CellClass>(cell))) {
        cell = static_cast<std::uint8_t>(cls);
    }
}

}  // namespace

ObservationGrid rasterize(const sim::WorldState& world) {
    ObservationGrid grid;
    grid.speed = static_cast<float>(world.ego.speed);

    const Vec2 fwd = Vec2::unit(world.ego.heading);
    const Vec2 left{-fwd.y, fwd.x};

    // Ground bands from the cell center's distance to the lane centerline.
    for (int r = 0; r < kGridSide; ++r) {
        for (int c = 0; c < kGridSide; ++c) {
            const double fx = 31.5 - r;
            const double ly = 15.5 - c;
            const Vec2 p = world.ego.position + fwd * fx + left * ly;
            const double d = sim::distance_to_centerline(p, world.lane);
            if (d <= kRoadHalfWidth) {
                grid.at(r, c) = static_cast<std::uint8_t>(CellClass::road);
            } else if (d <= kSidewalkOuter) {
                grid.at(r, c) = static_cast<std::uint8_t>(CellClass::sidewalk);
            }
        }
    }

    // Bodies: exact cell-rectangle overlap in the ego frame, only over the
    // cells covered by each body's bounding box.
    for (const sim::ActorState& a : world.actors) {
        const Vec2 rel = a.position - world.ego.position;
        const Vec2 pos_e{rel.dot(fwd), rel.dot(left)};
        double ex;
        double ey;
        sim::Obb box_e;
        if (a.footprint.is_disc) {
            ex = ey = a.footprint.radius;
        } else {
            box_e = {pos_e, Vec2::unit(a.heading - world.ego.heading),
                     a.footprint.half_length, a.footprint.half_width};
            ex = std::abs(box_e.axis.x) * box_e.half_length +
                 std::abs(box_e.axis.y) * box_e.half_width;
            ey = std::abs(box_e.axis.y) * box_e.half_length +
                 std::abs(box_e.axis.x) * box_e.half_width;
        }
        if (pos_e.x + ex < 0.0 || pos_e.x - ex > 32.0) continue;
        if (pos_e.y + ey < -16.0 || pos_e.y - ey > 16.0) continue;

        const int r0 = std::max(0, static_cast<int>(std::floor(31.0 - (pos_e.x + ex))));
        const int r1 = std::min(kGridSide - 1, static_cast<int>(std::ceil(32.0 - (pos_e.x - ex))));
        const int c0 = std::max(0, static_cast<int>(std::floor(15.0 - (pos_e.y + ey))));
        const int c1 = std::min(kGridSide - 1, static_cast<int>(std::ceil(16.0 - (pos_e.y - ey))));
        const CellClass cls = class_of(a.kind);
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                const sim::Obb rect = cell_rect(r, c);
                const bool hit = a.footprint.is_disc
                                     ? sim::disc_obb_overlap(pos_e, a.footprint.radius, rect)
                                     : sim::obb_overlap(rect, box_e);
                if (hit) stamp(grid, r, c, cls);
            }
        }
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Collection.

namespace {

// Scripted lane keeper: steer back toward the centerline (Stanley-style),
// hold the scenario's initial speed. Completely unaware of other actors.
sim::Action lane_keeping_action(const sim::WorldState& world, double target_speed) {
    const Vec2 a = world.lane.centerline.front();
    const Vec2 b = world.lane.centerline.back();
    const Vec2 dir = (b - a).normalized();
    const double lane_heading = std::atan2(dir.y, dir.x);
    // Signed lateral offset, positive to the left of the lane direction.
    const Vec2 rel = world.ego.position - a;
    const double offset = dir.x * rel.y - dir.y * rel.x;
    const double heading_err = sim::wrap_angle(world.ego.heading - lane_heading);

    const sim::VehicleParams vp;
    const double desired = -(heading_err + std::atan(offset / (world.ego.speed + 1.0)));
    sim::Action act;
    act.steer = std::clamp(desired / vp.max_steer, -1.0, 1.0);
    act.pedal = std::clamp(0.2 * (target_speed - world.ego.speed), -1.0, 1.0);
    return act;
}

constexpr int kMaxFramesPerEpisode =
    static_cast<int>(sim::kEpisodeTimeLimit / sim::kTimestep + 0.5);  // 225
constexpr int kParkedFramesToStop = 15;  // 1 s at rest ends a collection episode

}  // namespace

FrameDataset collect_dataset(int n_episodes, std::uint64_t seed) {
    if (n_episodes <= 0) throw std::invalid_argument("collect_dataset: n_episodes must be positive");
    FrameDataset ds;
    for (int ep = 0; ep < n_episodes; ++ep) {
        const std::uint64_t ep_seed = splitmix64_hash(seed ^ splitmix64_hash(static_cast<std::uint64_t>(ep)));
        scenario::BuiltScenario built = scenario::build_world(scenario::sample_params(ep_seed));
        sim::WorldState world = built.world;
        Rng noise(splitmix64_hash(ep_seed ^ 0x4E4F495345ull));

        const int begin = ds.frame_count();
        int parked = 0;
        for (int t = 0; t < kMaxFramesPerEpisode; ++t) {
            ds.frames.push_back(rasterize(world));

            sim::Action act = lane_keeping_action(world, built.params.collision_velocity);
            act.steer = std::clamp(act.steer + noise.gaussian(0.0, 0.1), -1.0, 1.0);
            act.pedal = std::clamp(act.pedal + noise.gaussian(0.0, 0.3), -1.0, 1.0);
            // Quantize to the dataset's storage precision so the executed
            // action and the recorded one are identical.
            act.steer = static_cast<double>(static_cast<float>(act.steer));
            act.pedal = static_cast<double>(static_cast<float>(act.pedal));
            ds.actions.push_back(act);

            sim::step_world(world, act);
            parked = world.ego.speed == 0.0 ? parked + 1 : 0;
            if (parked >= kParkedFramesToStop) break;
        }
        ds.episodes.emplace_back(begin, ds.frame_count());
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Dataset files: "CMS1" binary frames plus a JSON sidecar with episode ranges.

namespace {

constexpr char kDatasetMagic[4] = {'C', 'M', 'S', '1'};
constexpr std::uint32_t kDatasetVersion = 1;

void write_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

void save_dataset(const FrameDataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write dataset: " + path);
    f.write(kDatasetMagic, 4);
    write_u32(f, kDatasetVersion);
    write_u32(f, static_cast<std::uint32_t>(ds.frames.size()));
    write_u32(f, static_cast<std::uint32_t>(ds.grid_side));
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        const ObservationGrid& g = ds.frames[i];
        f.write(reinterpret_cast<const char*>(g.cells.data()),
                static_cast<std::streamsize>(g.cells.size()));
        f.write(reinterpret_cast<const char*>(&g.speed), sizeof(float));
        const float steer = static_cast<float>(ds.actions[i].steer);
        const float pedal = static_cast<float>(ds.actions[i].pedal);
        f.write(reinterpret_cast<const char*>(&steer), sizeof(float));
        f.write(reinterpret_cast<const char*>(&pedal), sizeof(float));
    }
    if (!f) throw std::runtime_error("write failed: " + path);

    nlohmann::ordered_json side;
    side["frame_count"] = ds.frames.size();
    side["episodes"] = nlohmann::json::array();
    for (const auto& [b, e] : ds.episodes) side["episodes"].push_back({b, e});
    std::ofstream sf(path + ".json", std::ios::binary);
    if (!sf) throw std::runtime_error("cannot write dataset sidecar: " + path + ".json");
    sf << side.dump(2) << "\n";
}

FrameDataset load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read dataset: " + path);
    char magic[4] = {};
    f.read(magic, 4);
    if (std::memcmp(magic, kDatasetMagic, 4) != 0) {
        throw std::runtime_error("not a frame dataset: " + path);
    }
    if (read_u32(f) != kDatasetVersion) {
        throw std::runtime_error("dataset version mismatch: " + path);
    }
    const std::uint32_t count = read_u32(f);
    const std::uint32_t side = read_u32(f);
    if (side != static_cast<std::uint32_t>(kGridSide)) {
        throw std::runtime_error("dataset grid size mismatch: " + path);
    }
    FrameDataset ds;
    ds.frames.resize(count);
    ds.actions.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        ObservationGrid& g = ds.frames[i];
        f.read(reinterpret_cast<char*>(g.cells.data()),
               static_cast<std::streamsize>(g.cells.size()));
        f.read(reinterpret_cast<char*>(&g.speed), sizeof(float));
        float steer = 0.0f;
        float pedal = 0.0f;
        f.read(reinterpret_cast<char*>(&steer), sizeof(float));
        f.read(reinterpret_cast<char*>(&pedal), sizeof(float));
        ds.actions[i] = {static_cast<double>(steer), static_cast<double>(pedal)};
    }
    if (!f) throw std::runtime_error("dataset truncated: " + path);

    std::ifstream sf(path + ".json", std::ios::binary);
    if (!sf) throw std::runtime_error("cannot read dataset sidecar: " + path + ".json");
    const nlohmann::json side_doc = nlohmann::json::parse(sf);
    for (const auto& range : side_doc.at("episodes")) {
        const int b = range.at(0).get<int>();
        const int e = range.at(1).get<int>();
        if (b < 0 || e < b || e > static_cast<int>(count)) {
            throw std::runtime_error("dataset sidecar has an invalid episode range: " + path);
        }
        ds.episodes.emplace_back(b, e);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// VAE training.

VaeLoss vae_loss(Vae& vae, const ObservationGrid& grid, const nn::MatF* eps) {
    const nn::MatF input = grids_to_input<float>(&grid, 1);
    const nn::MatF e = eps ? *eps : nn::MatF(nn::MatF::Zero(vae.latent_dim, 1));
    const VaeBatchResult<float> r = vae_forward(vae, input, e);
    VaeLoss out;
    out.reconstruction = static_cast<double>(r.reconstruction);
    out.kl = static_cast<double>(r.kl);
    out.total = out.reconstruction + out.kl;
    return out;
}

namespace {

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
    for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(0, i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
}

}  // namespace

VaeTrainReport train_vae(Vae& vae, const FrameDataset& ds, const VaeTrainConfig& cfg) {
    const int n = ds.frame_count();
    if (n < 10) throw std::invalid_argument("train_vae: need at least 10 frames");
    const int holdout = n / 10;
    const int n_train = n - holdout;

    Rng rng(cfg.seed);
    nn::Adam adam;
    adam.lr = cfg.lr;
    VaeTrainReport report;

    std::vector<int> order(static_cast<std::size_t>(n_train));
    std::iota(order.begin(), order.end(), 0);
    std::vector<ObservationGrid> batch;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_indices(order, rng);
        double recon_sum = 0.0;
        double kl_sum = 0.0;
        long seen = 0;
        for (int start = 0; start < n_train; start += cfg.batch) {
            const int B = std::min(cfg.batch, n_train - start);
            batch.assign(static_cast<std::size_t>(B), ObservationGrid{});
            for (int b = 0; b < B; ++b) {
                batch[static_cast<std::size_t>(b)] =
                    ds.frames[static_cast<std::size_t>(order[static_cast<std::size_t>(start + b)])];
            }
            const nn::MatF input = grids_to_input<float>(batch.data(), B);
            nn::MatF eps(vae.latent_dim, B);
            for (int c = 0; c < B; ++c) {
                for (int r = 0; r < vae.latent_dim; ++r) {
                    eps(r, c) = static_cast<float>(rng.gaussian());
                }
            }
            auto [res, grads] = vae_forward_backward(vae, input, eps, cfg.kl_weight);
            if (!std::isfinite(res.reconstruction) || !std::isfinite(res.kl)) {
                throw std::runtime_error("train_vae: loss diverged");
            }
            std::vector<nn::MatF> glist = nn::dense_grad_list(grads.encoder);
            for (nn::MatF& g : nn::dense_grad_list(grads.decoder)) glist.push_back(std::move(g));
            adam.step(vae_params(vae), glist);

            recon_sum += static_cast<double>(res.reconstruction) * B;
            kl_sum += static_cast<double>(res.kl) * B;
            seen += B;
        }
        report.epoch_reconstruction.push_back(recon_sum / static_cast<double>(seen));
        report.epoch_kl.push_back(kl_sum / static_cast<double>(seen));
    }

    // Held-out per-cell accuracy against the majority-class baseline.
    if (holdout > 0) {
        long correct = 0;
        long total = 0;
        std::array<long, kNumClasses> freq{};
        for (int start = n_train; start < n; start += 256) {
            const int B = std::min(256, n - start);
            const nn::MatF input =
                grids_to_input<float>(&ds.frames[static_cast<std::size_t>(start)], B);
            const nn::MatF eps = nn::MatF::Zero(vae.latent_dim, B);
            const VaeBatchResult<float> r = vae_forward(vae, input, eps);
            for (int b = 0; b < B; ++b) {
                const ObservationGrid& g = ds.frames[static_cast<std::size_t>(start + b)];
                for (int k = 0; k < kGridCells; ++k) {
                    int best = 0;
                    for (int c = 1; c < kNumClasses; ++c) {
                        if (r.logits(k * kNumClasses + c, b) > r.logits(k * kNumClasses + best, b)) {
                            best = c;
                        }
                    }
                    const int target = g.cells[static_cast<std::size_t>(k)];
                    freq[static_cast<std::size_t>(target)]++;
                    if (best == target) ++correct;
                    ++total;
                }
            }
        }
        report.holdout_accuracy = static_cast<double>(correct) / static_cast<double>(total);
        report.majority_class_fraction =
            static_cast<double>(*std::max_element(freq.begin(), freq.end())) /
            static_cast<double>(total);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Latent sequences.

SequenceDataset encode_dataset(Vae& vae, const FrameDataset& ds) {
    SequenceDataset out;
    out.latent_dim = vae.latent_dim;
    for (const auto& [begin, end] : ds.episodes) {
        const int T = end - begin;
        nn::MatF z(vae.latent_dim, T);
        for (int off = 0; off < T; off += 256) {
            const int B = std::min(256, T - off);
            const nn::MatF input =
                grids_to_input<float>(&ds.frames[static_cast<std::size_t>(begin + off)], B);
            const nn::MatF enc = nn::forward(vae.encoder, input);
            z.middleCols(off, B) = enc.topRows(vae.latent_dim);
        }
        nn::MatF acts(2, std::max(0, T - 1));
        for (int t = 0; t + 1 < T; ++t) {
            acts(0, t) = static_cast<float>(ds.actions[static_cast<std::size_t>(begin + t)].steer);
            acts(1, t) = static_cast<float>(ds.actions[static_cast<std::size_t>(begin + t)].pedal);
        }
        out.latents.push_back(std::move(z));
        out.actions.push_back(std::move(acts));
    }
    return out;
}

RnnTrainReport train_rnn(RnnPredictor& rnn, const SequenceDataset& ds, const RnnTrainConfig& cfg) {
    if (ds.latent_dim != rnn.latent_dim) {
        throw std::invalid_argument("train_rnn: latent size mismatch");
    }
    const int W = cfg.window;
    const int B = cfg.batch;
    const int L = rnn.latent_dim;
    const int H = rnn.hidden;

    // Enumerate admissible window starts: W inputs plus the final target.
    std::vector<std::pair<int, int>> windows;
    long total_tuples = 0;
    for (std::size_t e = 0; e < ds.latents.size(); ++e) {
        const int T = static_cast<int>(ds.latents[e].cols());
        total_tuples += std::max(0, T - 1);
        for (int s = 0; s + W < T; ++s) windows.emplace_back(static_cast<int>(e), s);
    }
    if (windows.empty()) throw std::invalid_argument("train_rnn: no episode long enough for a window");

    // One epoch visits roughly every tuple once in expectation.
    const long updates_per_epoch =
        std::max<long>(1, total_tuples / (static_cast<long>(B) * W));

    Rng rng(cfg.seed);
    nn::Adam adam;
    adam.lr = cfg.lr;
    RnnTrainReport report;

    std::vector<nn::LstmCache> caches(static_cast<std::size_t>(W));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double mse_sum = 0.0;
        for (long update = 0; update < updates_per_epoch; ++update) {
            std::vector<std::pair<int, int>> picks(static_cast<std::size_t>(B));
            for (int b = 0; b < B; ++b) {
                picks[static_cast<std::size_t>(b)] =
                    windows[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(windows.size()) - 1))];
            }

            // Unroll the cell over the window; stash hidden states so the
            // stateless head can run once over all (step, sample) columns.
            nn::MatF h = nn::MatF::Zero(H, B);
            nn::MatF c = nn::MatF::Zero(H, B);
            nn::MatF h_all(H, B * W);
            nn::MatF z_in(L, B * W);
            nn::MatF z_next(L, B * W);
            for (int t = 0; t < W; ++t) {
                nn::MatF x(L + 2, B);
                for (int b = 0; b < B; ++b) {
                    const auto [e, s] = picks[static_cast<std::size_t>(b)];
                    x.col(b).topRows(L) = ds.latents[static_cast<std::size_t>(e)].col(s + t);
                    x.col(b).bottomRows(2) = ds.actions[static_cast<std::size_t>(e)].col(s + t);
                    z_in.col(t * B + b) = ds.latents[static_cast<std::size_t>(e)].col(s + t);
                    z_next.col(t * B + b) = ds.latents[static_cast<std::size_t>(e)].col(s + t + 1);
                }
                std::tie(h, c) = nn::lstm_step(rnn.lstm, x, h, c, &caches[static_cast<std::size_t>(t)]);
                h_all.middleCols(t * B, B) = h;
            }
            const nn::MatF pred = z_in + nn::forward(rnn.head, h_all);
            const nn::MatF diff = pred - z_next;
            const double mse = static_cast<double>(diff.squaredNorm()) / static_cast<double>(diff.size());
            if (!std::isfinite(mse)) throw std::runtime_error("train_rnn: loss diverged");
            mse_sum += mse;

            const nn::MatF dpred = diff * (2.0f / static_cast<float>(diff.size()));
            const nn::DenseGrads head_g = nn::backward(rnn.head, dpred);

            nn::MatF dwx = nn::MatF::Zero(4 * H, L + 2);
            nn::MatF dwh = nn::MatF::Zero(4 * H, H);
            nn::MatF db = nn::MatF::Zero(4 * H, 1);
            nn::MatF dh_next = nn::MatF::Zero(H, B);
            nn::MatF dc_next = nn::MatF::Zero(H, B);
            for (int t = W - 1; t >= 0; --t) {
                const nn::MatF dh = head_g.dinput.middleCols(t * B, B) + dh_next;
                const nn::LstmGrads g =
                    nn::lstm_backward(rnn.lstm, caches[static_cast<std::size_t>(t)], dh, dc_next);
                dwx += g.dwx;
                dwh += g.dwh;
                db += g.db;
                dh_next = g.dh_prev;
                dc_next = g.dc_prev;
            }

            std::vector<nn::MatF> glist{std::move(dwx), std::move(dwh), std::move(db)};
            for (nn::MatF& g : nn::dense_grad_list(head_g)) glist.push_back(std::move(g));
            adam.step(rnn_params(rnn), glist);
        }
        report.epoch_mse.push_back(mse_sum / static_cast<double>(updates_per_epoch));
    }
    return report;
}

PredictorMse evaluate_predictor(RnnPredictor& rnn, const SequenceDataset& ds) {
    if (ds.latent_dim != rnn.latent_dim) {
        throw std::invalid_argument("evaluate_predictor: latent size mismatch");
    }
    double model_sum = 0.0;
    double identity_sum = 0.0;
    long count = 0;
    for (std::size_t e = 0; e < ds.latents.size(); ++e) {
        const nn::MatF& z = ds.latents[e];
        const nn::MatF& a = ds.actions[e];
        const int T = static_cast<int>(z.cols());
        RnnState state = rnn_initial_state(rnn, 1);
        for (int t = 0; t + 1 < T; ++t) {
            auto [pred, next] = rnn_predict(rnn, nn::MatF(z.col(t)), nn::MatF(a.col(t)), state);
            state = std::move(next);
            model_sum += static_cast<double>((pred - z.col(t + 1)).squaredNorm());
            identity_sum += static_cast<double>((z.col(t) - z.col(t + 1)).squaredNorm());
            count += rnn.latent_dim;
        }
    }
    if (count == 0) throw std::invalid_argument("evaluate_predictor: no transitions");
    return {model_sum / static_cast<double>(count), identity_sum / static_cast<double>(count)};
}

// ---------------------------------------------------------------------------
// Model files.

void save_vae(const Vae& vae, const std::string& path) {
    nlohmann::ordered_json body;
    body["architecture"] = {{"latent_dim", vae.latent_dim}, {"hidden", vae.hidden}};
    body["encoder"] = nn::dense_to_json(vae.encoder);
    body["decoder"] = nn::dense_to_json(vae.decoder);
    nn::save_model_file(path, "vae", body);
}

Vae load_vae(const std::string& path) {
    const nlohmann::json doc = nn::load_model_file(path, "vae");
    Vae vae;
    vae.latent_dim = doc.at("architecture").at("latent_dim").get<int>();
    vae.hidden = doc.at("architecture").at("hidden").get<int>();
    vae.encoder = nn::dense_from_json(doc.at("encoder"));
    vae.decoder = nn::dense_from_json(doc.at("decoder"));
    if (vae.encoder.output_size() != 2 * vae.latent_dim ||
        vae.decoder.input_size() != vae.latent_dim) {
        throw std::runtime_error("vae model: latent size does not match the networks");
    }
    return vae;
}

void save_rnn(const RnnPredictor& rnn, const std::string& path) {
    nlohmann::ordered_json body;
    body["architecture"] = {{"latent_dim", rnn.latent_dim}, {"hidden", rnn.hidden}};
    body["lstm"] = nn::lstm_to_json(rnn.lstm);
    body["head"] = nn::dense_to_json(rnn.head);
    nn::save_model_file(path, "rnn", body);
}

RnnPredictor load_rnn(const std::string& path) {
    const nlohmann::json doc = nn::load_model_file(path, "rnn");
    RnnPredictor rnn;
    rnn.latent_dim = doc.at("architecture").at("latent_dim").get<int>();
    rnn.hidden = doc.at("architecture").at("hidden").get<int>();
    rnn.lstm = nn::lstm_from_json(doc.at("lstm"));
    rnn.head = nn::dense_from_json(doc.at("head"));
    if (rnn.lstm.input_size != rnn.latent_dim + 2 || rnn.lstm.hidden_size != rnn.hidden ||
        rnn.head.output_size() != rnn.latent_dim) {
        throw std::runtime_error("rnn model: architecture does not match the networks");
    }
    return rnn;
}

}  // namespace crashsim::worldmodel
