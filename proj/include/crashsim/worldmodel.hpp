#ifndef CRASHSIM_WORLDMODEL_HPP
#define CRASHSIM_WORLDMODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crashsim/nn.hpp"
#include "crashsim/rng.hpp"
#include "crashsim/sim.hpp"

namespace crashsim::worldmodel {

// Ego-centric semantic occupancy grid: 32 x 32 one-meter cells, ego at the
// bottom-center heading up. Row 0 is the far edge (32 m ahead), the last row
// ends at the ego center; column 0 is the far left (+16 m lateral).
constexpr int kGridSide = 32;
constexpr int kGridCells = kGridSide * kGridSide;
constexpr int kNumClasses = 6;

enum class CellClass : std::uint8_t {
    none = 0,
    road = 1,
    sidewalk = 2,
    vehicle = 3,
    pedestrian = 4,
    static_obstacle = 5,
};

// Reconstruction weight per true cell class. Actor cells are vanishingly
// rare (pedestrians ~0.2% of cells, vehicles ~0.7%), so an unweighted mean
// cross-entropy reaches a low loss by painting every rare cell as background,
// and everything trained on the latent is blind to the one thing that
// matters. Each cell's term is scaled by the weight of its true class and
// the mean is normalized by summed weight, so a uniform decoder still scores
// ln(kNumClasses) and single-class datasets are unaffected.
constexpr double kClassWeight[kNumClasses] = {1.0, 1.0, 1.0, 10.0, 20.0, 12.0};

// Label priority when several entities overlap one cell (highest wins). Not
// the same order as the class codes: pedestrians above vehicles above statics
// above the ground bands.
int class_priority(CellClass c);

// Lateral ground bands, distances from the lane centerline.
constexpr double kRoadHalfWidth = 3.5;      // ego lane plus the oncoming lane
constexpr double kSidewalkOuter = 5.5;      // road edge to sidewalk outer edge

struct ObservationGrid {
    std::array<std::uint8_t, kGridCells> cells{};  // row-major CellClass codes
    float speed = 0.0f;                            // ego forward speed, m/s

    std::uint8_t& at(int row, int col) { return cells[static_cast<std::size_t>(row * kGridSide + col)]; }
    std::uint8_t at(int row, int col) const { return cells[static_cast<std::size_t>(row * kGridSide + col)]; }
};

// Labels every cell by the highest-priority overlapping entity. Bodies use
// exact cell-rectangle overlap tests in the ego frame (small pedestrian discs
// must not slip between cell centers); ground bands use the cell center's
// distance to the lane centerline. The ego itself is not drawn.
ObservationGrid rasterize(const sim::WorldState& world);

// ---------------------------------------------------------------------------
// Frame dataset: the phase-1 collection product.

struct FrameDataset {
    int grid_side = kGridSide;
    std::vector<ObservationGrid> frames;
    std::vector<sim::Action> actions;               // action taken at each frame
    std::vector<std::pair<int, int>> episodes;      // [begin, end) frame ranges

    int frame_count() const { return static_cast<int>(frames.size()); }
};

// Rolls a scripted lane-keeping, obstacle-agnostic controller with Gaussian
// exploration noise (sigma_steer 0.1, sigma_pedal 0.3, clamped) through
// seeded random scenarios, recording (grid, speed, action) at 15 FPS.
FrameDataset collect_dataset(int n_episodes, std::uint64_t seed);

// Binary frame file (magic "CMS1") plus a JSON sidecar at path + ".json"
// holding the episode ranges.
void save_dataset(const FrameDataset& ds, const std::string& path);
FrameDataset load_dataset(const std::string& path);

// ---------------------------------------------------------------------------
// VAE: dense encoder to a diagonal Gaussian latent, dense decoder to
// per-cell class scores.

template <typename S>
struct VaeT {
    int latent_dim = 0;
    int hidden = 0;
    nn::DenseNetT<S> encoder;  // one-hot grid -> [mu; logvar]
    nn::DenseNetT<S> decoder;  // z -> per-cell class logits
};
using Vae = VaeT<float>;

template <typename S>
VaeT<S> make_vae(int latent_dim, int hidden, Rng& rng) {
    VaeT<S> vae;
    vae.latent_dim = latent_dim;
    vae.hidden = hidden;
    vae.encoder = nn::make_dense<S>({kGridCells * kNumClasses, hidden, 2 * latent_dim},
                                    {nn::Activation::relu, nn::Activation::identity}, rng);
    vae.decoder = nn::make_dense<S>({latent_dim, hidden, kGridCells * kNumClasses},
                                    {nn::Activation::relu, nn::Activation::identity}, rng);
    return vae;
}

// One-hot expansion, one grid per column.
template <typename S>
nn::Mat<S> grids_to_input(const ObservationGrid* grids, int count) {
    nn::Mat<S> x = nn::Mat<S>::Zero(kGridCells * kNumClasses, count);
    for (int b = 0; b < count; ++b) {
        for (int k = 0; k < kGridCells; ++k) {
            x(k * kNumClasses + grids[b].cells[static_cast<std::size_t>(k)], b) = S(1);
        }
    }
    return x;
}

template <typename S>
struct VaeBatchResult {
    S reconstruction = S(0);  // class-weighted mean per-cell cross-entropy
    S kl = S(0);              // mean per-sample KL to the standard normal
    nn::Mat<S> mu, logvar, z, logits;

    S total() const { return reconstruction + kl; }
};

template <typename S>
struct VaeGradients {
    nn::DenseGradsT<S> encoder;
    nn::DenseGradsT<S> decoder;
};

template <typename S>
std::vector<nn::Mat<S>*> vae_params(VaeT<S>& vae) {
    std::vector<nn::Mat<S>*> out = nn::dense_params(vae.encoder);
    for (nn::Mat<S>* p : nn::dense_params(vae.decoder)) out.push_back(p);
    return out;
}

// Forward pass over a one-hot batch with explicit reparameterization noise
// (eps zero => z = mu). Reconstruction targets are the classes encoded in the
// input itself.
template <typename S>
VaeBatchResult<S> vae_forward(VaeT<S>& vae, const nn::Mat<S>& input, const nn::Mat<S>& eps) {
    const int B = static_cast<int>(input.cols());
    const int L = vae.latent_dim;
    VaeBatchResult<S> r;
    const nn::Mat<S> enc = nn::forward(vae.encoder, input);
    r.mu = enc.topRows(L);
    r.logvar = enc.bottomRows(L);
    r.z = r.mu + (r.logvar.array() / S(2)).exp().matrix().cwiseProduct(eps);
    r.logits = nn::forward(vae.decoder, r.z);

    // Class-weighted mean per-cell cross-entropy with a numerically-stable
    // log-softmax, and the analytic KL, both accumulated in double.
    double ce = 0.0;
    double wsum = 0.0;
    for (int b = 0; b < B; ++b) {
        for (int k = 0; k < kGridCells; ++k) {
            double maxv = -1e30;
            int target = -1;
            for (int c = 0; c < kNumClasses; ++c) {
                maxv = std::max(maxv, static_cast<double>(r.logits(k * kNumClasses + c, b)));
                if (input(k * kNumClasses + c, b) == S(1)) target = c;
            }
            double lse = 0.0;
            for (int c = 0; c < kNumClasses; ++c) {
                lse += std::exp(static_cast<double>(r.logits(k * kNumClasses + c, b)) - maxv);
            }
            const double w = kClassWeight[target];
            ce += w * (maxv + std::log(lse) -
                       static_cast<double>(r.logits(k * kNumClasses + target, b)));
            wsum += w;
        }
    }
    r.reconstruction = static_cast<S>(ce / wsum);

    double kl = 0.0;
    for (int b = 0; b < B; ++b) {
        for (int i = 0; i < L; ++i) {
            const double m = static_cast<double>(r.mu(i, b));
            const double l = static_cast<double>(r.logvar(i, b));
            kl += -0.5 * (1.0 + l - m * m - std::exp(l));
        }
    }
    r.kl = static_cast<S>(kl / B);
    return r;
}

// Forward plus reverse pass for the training objective
// reconstruction + kl_weight * kl. Reported losses are unweighted.
template <typename S>
std::pair<VaeBatchResult<S>, VaeGradients<S>> vae_forward_backward(VaeT<S>& vae,
                                                                   const nn::Mat<S>& input,
                                                                   const nn::Mat<S>& eps,
                                                                   S kl_weight) {
    const int B = static_cast<int>(input.cols());
    const int L = vae.latent_dim;
    VaeBatchResult<S> r = vae_forward(vae, input, eps);

    // d(reconstruction)/d(logits) = w_cell * (softmax - onehot) / sum(w),
    // mirroring the weight-normalized mean in the forward pass. Targets (and
    // with them the weight sum) come from the one-hot input.
    std::vector<int> targets(static_cast<std::size_t>(B) * kGridCells, 0);
    double wsum = 0.0;
    for (int b = 0; b < B; ++b) {
        for (int k = 0; k < kGridCells; ++k) {
            for (int c = 0; c < kNumClasses; ++c) {
                if (input(k * kNumClasses + c, b) == S(1)) {
                    targets[static_cast<std::size_t>(b) * kGridCells + k] = c;
                    wsum += kClassWeight[c];
                    break;
                }
            }
        }
    }
    nn::Mat<S> dlogits(r.logits.rows(), B);
    for (int b = 0; b < B; ++b) {
        for (int k = 0; k < kGridCells; ++k) {
            S maxv = r.logits(k * kNumClasses, b);
            for (int c = 1; c < kNumClasses; ++c) {
                maxv = std::max(maxv, r.logits(k * kNumClasses + c, b));
            }
            S denom = S(0);
            for (int c = 0; c < kNumClasses; ++c) {
                denom += std::exp(r.logits(k * kNumClasses + c, b) - maxv);
            }
            const int target = targets[static_cast<std::size_t>(b) * kGridCells + k];
            const S scale = static_cast<S>(kClassWeight[target] / wsum);
            for (int c = 0; c < kNumClasses; ++c) {
                const S p = std::exp(r.logits(k * kNumClasses + c, b) - maxv) / denom;
                dlogits(k * kNumClasses + c, b) =
                    (p - input(k * kNumClasses + c, b)) * scale;
            }
        }
    }

    VaeGradients<S> g;
    g.decoder = nn::backward(vae.decoder, dlogits);

    // Through the reparameterization into (mu, logvar), plus the KL term.
    const nn::Mat<S> sigma = (r.logvar.array() / S(2)).exp().matrix();
    nn::Mat<S> denc(2 * L, B);
    denc.topRows(L) = g.decoder.dinput + kl_weight * r.mu / S(B);
    denc.bottomRows(L) =
        g.decoder.dinput.cwiseProduct(eps).cwiseProduct(sigma) * S(0.5) +
        kl_weight * ((r.logvar.array().exp() - S(1)) / (S(2) * B)).matrix();
    g.encoder = nn::backward(vae.encoder, denc);
    return {std::move(r), std::move(g)};
}

struct VaeLoss {
    double reconstruction = 0.0;
    double kl = 0.0;
    double total = 0.0;  // reconstruction + kl
};

// Single-grid evaluation; eps defaults to zero (z = mu).
VaeLoss vae_loss(Vae& vae, const ObservationGrid& grid, const nn::MatF* eps = nullptr);

struct VaeTrainConfig {
    int epochs = 2;
    int batch = 32;
    float lr = 1e-4f;
    float kl_weight = 1e-3f;  // KL scale against the per-cell-mean reconstruction
    std::uint64_t seed = 0;
};

struct VaeTrainReport {
    std::vector<double> epoch_reconstruction;
    std::vector<double> epoch_kl;
    double holdout_accuracy = 0.0;        // per-cell class accuracy, held-out 10%
    double majority_class_fraction = 0.0; // held-out majority-class baseline
};

// Adam training over one-hot frames; throws on non-finite losses.
VaeTrainReport train_vae(Vae& vae, const FrameDataset& ds, const VaeTrainConfig& cfg);

// ---------------------------------------------------------------------------
// Recurrent next-latent predictor: LSTM over (z_t, a_t), dense head to z.

template <typename S>
struct RnnPredictorT {
    int latent_dim = 0;
    int hidden = 0;
    nn::LstmCellT<S> lstm;   // input latent_dim + 2
    nn::DenseNetT<S> head;   // hidden -> latent_dim, identity output
};
using RnnPredictor = RnnPredictorT<float>;

template <typename S>
struct RnnStateT {
    nn::Mat<S> h, c;
};
using RnnState = RnnStateT<float>;

template <typename S>
RnnPredictorT<S> make_rnn(int latent_dim, int hidden, Rng& rng) {
    RnnPredictorT<S> rnn;
    rnn.latent_dim = latent_dim;
    rnn.hidden = hidden;
    rnn.lstm = nn::make_lstm<S>(latent_dim + 2, hidden, rng);
    rnn.head = nn::make_dense<S>({hidden, latent_dim}, {nn::Activation::identity}, rng);
    return rnn;
}

template <typename S>
RnnStateT<S> rnn_initial_state(const RnnPredictorT<S>& rnn, int batch) {
    return {nn::Mat<S>::Zero(rnn.hidden, batch), nn::Mat<S>::Zero(rnn.hidden, batch)};
}

// One prediction step: x = [z; action], LSTM advance, dense head. The next
// latent is predicted as a residual on the current one (z + head(h)), so the
// untrained predictor starts at the hold-current-latent baseline and training
// only has to learn the motion delta.
template <typename S>
std::pair<nn::Mat<S>, RnnStateT<S>> rnn_predict(RnnPredictorT<S>& rnn, const nn::Mat<S>& z,
                                                const nn::Mat<S>& action,
                                                const RnnStateT<S>& state) {
    nn::Mat<S> x(rnn.latent_dim + 2, z.cols());
    x.topRows(rnn.latent_dim) = z;
    x.bottomRows(2) = action;
    auto [h, c] = nn::lstm_step(rnn.lstm, x, state.h, state.c);
    nn::Mat<S> pred = z + nn::forward(rnn.head, h);
    return {std::move(pred), RnnStateT<S>{std::move(h), std::move(c)}};
}

template <typename S>
std::vector<nn::Mat<S>*> rnn_params(RnnPredictorT<S>& rnn) {
    std::vector<nn::Mat<S>*> out = nn::lstm_params(rnn.lstm);
    for (nn::Mat<S>* p : nn::dense_params(rnn.head)) out.push_back(p);
    return out;
}

// ---------------------------------------------------------------------------
// Latent sequences and RNN training.

struct SequenceDataset {
    int latent_dim = 0;
    // Per episode: latents (latent_dim x T) and the actions taken (2 x T-1);
    // consecutive tuples chain by construction.
    std::vector<nn::MatF> latents;
    std::vector<nn::MatF> actions;
};

// Encodes every frame with z = mu and groups by episode.
SequenceDataset encode_dataset(Vae& vae, const FrameDataset& ds);

struct RnnTrainConfig {
    int epochs = 10;
    int batch = 32;    // windows per update
    int window = 16;   // truncated backprop-through-time length
    float lr = 1e-4f;
    std::uint64_t seed = 0;
};

struct RnnTrainReport {
    std::vector<double> epoch_mse;
};

// Teacher-forced MSE on next-latent prediction; throws on non-finite loss.
RnnTrainReport train_rnn(RnnPredictor& rnn, const SequenceDataset& ds, const RnnTrainConfig& cfg);

// Teacher-forced MSE of the predictor and of the identity baseline
// (z_pred = z_t) over whole episodes.
struct PredictorMse {
    double model = 0.0;
    double identity = 0.0;
};
PredictorMse evaluate_predictor(RnnPredictor& rnn, const SequenceDataset& ds);

// ---------------------------------------------------------------------------
// Model files.

void save_vae(const Vae& vae, const std::string& path);
Vae load_vae(const std::string& path);
void save_rnn(const RnnPredictor& rnn, const std::string& path);
RnnPredictor load_rnn(const std::string& path);

}  // namespace crashsim::worldmodel

#endif
