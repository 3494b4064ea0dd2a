#ifndef CRASHSIM_NN_HPP
#define CRASHSIM_NN_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "crashsim/rng.hpp"
#include "json.hpp"

// Minimal neural kernel: dense stacks, an LSTM cell, reverse-mode gradients,
// Adam, soft target updates, JSON (de)serialization. Templated on the scalar
// so the production float path and the double-precision gradient checks run
// the same code. Batches are stored as matrix columns.
namespace crashsim::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

enum class Activation { identity, relu, tanh, sigmoid };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
    }
    throw std::logic_error("unknown activation");
}

inline Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    throw std::runtime_error("unknown activation: " + name);
}

template <typename S>
Mat<S> apply_activation(Activation a, const Mat<S>& x) {
    switch (a) {
        case Activation::identity: return x;
        case Activation::relu: return x.cwiseMax(S(0));
        case Activation::tanh: return x.array().tanh().matrix();
        case Activation::sigmoid:
            return (S(1) / (S(1) + (-x.array()).exp())).matrix();
    }
    throw std::logic_error("unknown activation");
}

// Derivative expressed through pre- and post-activation values.
template <typename S>
Mat<S> activation_derivative(Activation a, const Mat<S>& pre, const Mat<S>& post) {
    switch (a) {
        case Activation::identity: return Mat<S>::Ones(pre.rows(), pre.cols());
        case Activation::relu:
            return (pre.array() > S(0)).template cast<S>().matrix();
        case Activation::tanh:
            return (S(1) - post.array().square()).matrix();
        case Activation::sigmoid:
            return (post.array() * (S(1) - post.array())).matrix();
    }
    throw std::logic_error("unknown activation");
}

template <typename S>
struct DenseLayerT {
    Mat<S> w;  // out x in
    Mat<S> b;  // out x 1
    Activation act = Activation::identity;
};

template <typename S>
struct DenseNetT {
    std::vector<DenseLayerT<S>> layers;
    // Forward caches for reverse mode: post[0] is the input, post[i] the
    // output of layer i; pre[i] is layer i's pre-activation.
    std::vector<Mat<S>> pre;
    std::vector<Mat<S>> post;

    int input_size() const { return static_cast<int>(layers.front().w.cols()); }
    int output_size() const { return static_cast<int>(layers.back().w.rows()); }
};

// Glorot-uniform initialized stack: sizes = [in, h1, ..., out],
// acts.size() == sizes.size() - 1.
template <typename S>
DenseNetT<S> make_dense(const std::vector<int>& sizes, const std::vector<Activation>& acts,
                        Rng& rng) {
    if (sizes.size() < 2 || acts.size() != sizes.size() - 1) {
        throw std::invalid_argument("make_dense: sizes/activations mismatch");
    }
    DenseNetT<S> net;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        DenseLayerT<S> layer;
        const int fan_in = sizes[i];
        const int fan_out = sizes[i + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        layer.w = Mat<S>(fan_out, fan_in);
        for (int c = 0; c < fan_in; ++c) {
            for (int r = 0; r < fan_out; ++r) {
                layer.w(r, c) = static_cast<S>(rng.uniform(-limit, limit));
            }
        }
        layer.b = Mat<S>::Zero(fan_out, 1);
        layer.act = acts[i];
        net.layers.push_back(std::move(layer));
    }
    return net;
}

template <typename S>
Mat<S> forward(DenseNetT<S>& net, const Mat<S>& x) {
    if (x.rows() != net.layers.front().w.cols()) {
        throw std::invalid_argument("forward: input rows do not match the first layer");
    }
    net.pre.assign(net.layers.size(), Mat<S>());
    net.post.assign(net.layers.size() + 1, Mat<S>());
    net.post[0] = x;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const DenseLayerT<S>& l = net.layers[i];
        net.pre[i] = (l.w * net.post[i]).colwise() + Eigen::Matrix<S, Eigen::Dynamic, 1>(l.b);
        net.post[i + 1] = apply_activation<S>(l.act, net.pre[i]);
    }
    return net.post.back();
}

template <typename S>
struct DenseGradsT {
    std::vector<Mat<S>> dw;
    std::vector<Mat<S>> db;
    Mat<S> dinput;
};

// Reverse mode from an upstream dL/doutput of the cached forward batch.
// Parameter gradients are summed over the batch columns.
template <typename S>
DenseGradsT<S> backward(const DenseNetT<S>& net, const Mat<S>& upstream) {
    if (net.post.size() != net.layers.size() + 1) {
        throw std::logic_error("backward: no cached forward pass");
    }
    DenseGradsT<S> g;
    g.dw.resize(net.layers.size());
    g.db.resize(net.layers.size());
    Mat<S> delta = upstream;
    for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
        const DenseLayerT<S>& l = net.layers[static_cast<std::size_t>(i)];
        const Mat<S> dpre =
            delta.cwiseProduct(activation_derivative<S>(l.act, net.pre[i], net.post[i + 1]));
        g.dw[static_cast<std::size_t>(i)] = dpre * net.post[i].transpose();
        g.db[static_cast<std::size_t>(i)] = dpre.rowwise().sum();
        delta = l.w.transpose() * dpre;
    }
    g.dinput = std::move(delta);
    return g;
}

// Flat parameter/gradient views in a fixed order (layer 0 w, b, layer 1 ...).
template <typename S>
std::vector<Mat<S>*> dense_params(DenseNetT<S>& net) {
    std::vector<Mat<S>*> out;
    for (DenseLayerT<S>& l : net.layers) {
        out.push_back(&l.w);
        out.push_back(&l.b);
    }
    return out;
}

template <typename S>
std::vector<Mat<S>> dense_grad_list(const DenseGradsT<S>& g) {
    std::vector<Mat<S>> out;
    for (std::size_t i = 0; i < g.dw.size(); ++i) {
        out.push_back(g.dw[i]);
        out.push_back(g.db[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// LSTM cell, gate rows stacked [input; forget; candidate; output].

template <typename S>
struct LstmCellT {
    int input_size = 0;
    int hidden_size = 0;
    Mat<S> wx;  // 4H x I
    Mat<S> wh;  // 4H x H
    Mat<S> b;   // 4H x 1
};

template <typename S>
LstmCellT<S> make_lstm(int input_size, int hidden_size, Rng& rng) {
    LstmCellT<S> cell;
    cell.input_size = input_size;
    cell.hidden_size = hidden_size;
    const auto init = [&](int rows, int cols) {
        const double limit = std::sqrt(6.0 / (rows + cols));
        Mat<S> m(rows, cols);
        for (int c = 0; c < cols; ++c) {
            for (int r = 0; r < rows; ++r) m(r, c) = static_cast<S>(rng.uniform(-limit, limit));
        }
        return m;
    };
    cell.wx = init(4 * hidden_size, input_size);
    cell.wh = init(4 * hidden_size, hidden_size);
    cell.b = Mat<S>::Zero(4 * hidden_size, 1);
    return cell;
}

template <typename S>
struct LstmCacheT {
    Mat<S> x, h_prev, c_prev;
    Mat<S> i, f, g, o;  // gate activations
    Mat<S> c, tanh_c;
};

template <typename S>
std::pair<Mat<S>, Mat<S>> lstm_step(const LstmCellT<S>& cell, const Mat<S>& x, const Mat<S>& h,
                                    const Mat<S>& c, LstmCacheT<S>* cache = nullptr) {
    const int H = cell.hidden_size;
    const Mat<S> z = ((cell.wx * x + cell.wh * h).colwise() +
                      Eigen::Matrix<S, Eigen::Dynamic, 1>(cell.b));
    const Mat<S> i = apply_activation<S>(Activation::sigmoid, z.topRows(H));
    const Mat<S> f = apply_activation<S>(Activation::sigmoid, z.middleRows(H, H));
    const Mat<S> g = apply_activation<S>(Activation::tanh, z.middleRows(2 * H, H));
    const Mat<S> o = apply_activation<S>(Activation::sigmoid, z.bottomRows(H));
    Mat<S> c_new = f.cwiseProduct(c) + i.cwiseProduct(g);
    Mat<S> tanh_c = c_new.array().tanh().matrix();
    Mat<S> h_new = o.cwiseProduct(tanh_c);
    if (cache) {
        cache->x = x;
        cache->h_prev = h;
        cache->c_prev = c;
        cache->i = i;
        cache->f = f;
        cache->g = g;
        cache->o = o;
        cache->c = c_new;
        cache->tanh_c = tanh_c;
    }
    return {std::move(h_new), std::move(c_new)};
}

template <typename S>
struct LstmGradsT {
    Mat<S> dwx, dwh, db;
    Mat<S> dx, dh_prev, dc_prev;
};

template <typename S>
LstmGradsT<S> lstm_backward(const LstmCellT<S>& cell, const LstmCacheT<S>& cc, const Mat<S>& dh,
                            const Mat<S>& dc_in) {
    const auto ones = [&](const Mat<S>& m) { return Mat<S>::Ones(m.rows(), m.cols()); };
    const Mat<S> do_ = dh.cwiseProduct(cc.tanh_c);
    const Mat<S> dc = dc_in + dh.cwiseProduct(cc.o).cwiseProduct(
                                  (ones(cc.tanh_c) - cc.tanh_c.cwiseProduct(cc.tanh_c)));
    const Mat<S> df = dc.cwiseProduct(cc.c_prev);
    const Mat<S> di = dc.cwiseProduct(cc.g);
    const Mat<S> dg = dc.cwiseProduct(cc.i);

    // Back through the gate nonlinearities to the stacked pre-activations.
    const int H = cell.hidden_size;
    Mat<S> dz(4 * H, dh.cols());
    dz.topRows(H) = di.cwiseProduct(cc.i).cwiseProduct(ones(cc.i) - cc.i);
    dz.middleRows(H, H) = df.cwiseProduct(cc.f).cwiseProduct(ones(cc.f) - cc.f);
    dz.middleRows(2 * H, H) = dg.cwiseProduct(ones(cc.g) - cc.g.cwiseProduct(cc.g));
    dz.bottomRows(H) = do_.cwiseProduct(cc.o).cwiseProduct(ones(cc.o) - cc.o);

    LstmGradsT<S> out;
    out.dwx = dz * cc.x.transpose();
    out.dwh = dz * cc.h_prev.transpose();
    out.db = dz.rowwise().sum();
    out.dx = cell.wx.transpose() * dz;
    out.dh_prev = cell.wh.transpose() * dz;
    out.dc_prev = dc.cwiseProduct(cc.f);
    return out;
}

template <typename S>
std::vector<Mat<S>*> lstm_params(LstmCellT<S>& cell) {
    return {&cell.wx, &cell.wh, &cell.b};
}

// ---------------------------------------------------------------------------
// Adam (the rescaled-step formulation: bias correction folded into the rate).

template <typename S>
struct AdamT {
    S lr = S(1e-4);
    S beta1 = S(0.9);
    S beta2 = S(0.999);
    S eps = S(1e-8);
    long steps = 0;
    std::vector<Mat<S>> m;
    std::vector<Mat<S>> v;

    void step(const std::vector<Mat<S>*>& params, const std::vector<Mat<S>>& grads) {
        if (params.size() != grads.size()) {
            throw std::invalid_argument("adam: params/grads length mismatch");
        }
        if (m.empty()) {
            for (const Mat<S>* p : params) {
                m.push_back(Mat<S>::Zero(p->rows(), p->cols()));
                v.push_back(Mat<S>::Zero(p->rows(), p->cols()));
            }
        }
        ++steps;
        const S c1 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta1), steps));
        const S c2 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta2), steps));
        const S alpha = lr * static_cast<S>(std::sqrt(static_cast<double>(c2))) / c1;
        for (std::size_t k = 0; k < params.size(); ++k) {
            m[k] = beta1 * m[k] + (S(1) - beta1) * grads[k];
            v[k] = beta2 * v[k] + (S(1) - beta2) * grads[k].cwiseProduct(grads[k]);
            params[k]->noalias() -=
                alpha * m[k].cwiseQuotient((v[k].cwiseSqrt().array() + eps).matrix());
        }
    }
};

// theta_target <- (1 - tau) * theta_target + tau * theta_local, elementwise.
template <typename S>
void soft_update(const std::vector<Mat<S>*>& target, const std::vector<const Mat<S>*>& local,
                 S tau) {
    if (target.size() != local.size()) {
        throw std::invalid_argument("soft_update: parameter list mismatch");
    }
    for (std::size_t k = 0; k < target.size(); ++k) {
        *target[k] = (S(1) - tau) * (*target[k]) + tau * (*local[k]);
    }
}

template <typename S>
void soft_update(DenseNetT<S>& target, const DenseNetT<S>& local, S tau) {
    auto t = dense_params(target);
    std::vector<const Mat<S>*> l;
    for (const DenseLayerT<S>& layer : local.layers) {
        l.push_back(&layer.w);
        l.push_back(&layer.b);
    }
    soft_update<S>(t, l, tau);
}

// ---------------------------------------------------------------------------
// Interchange tensor and JSON model files (float32 storage, row-major data).

struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;
};

inline Tensor to_tensor(const Mat<float>& m) {
    Tensor t;
    t.shape = {static_cast<int>(m.rows()), static_cast<int>(m.cols())};
    t.data.reserve(static_cast<std::size_t>(m.size()));
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) t.data.push_back(m(r, c));
    }
    return t;
}

inline Mat<float> from_tensor(const Tensor& t) {
    if (t.shape.size() != 2) throw std::runtime_error("tensor: expected 2-d shape");
    const std::size_t n = static_cast<std::size_t>(t.shape[0]) * static_cast<std::size_t>(t.shape[1]);
    if (t.data.size() != n) throw std::runtime_error("tensor: data length does not match shape");
    Mat<float> m(t.shape[0], t.shape[1]);
    std::size_t k = 0;
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) m(r, c) = t.data[k++];
    }
    return m;
}

inline nlohmann::ordered_json tensor_to_json(const Tensor& t) {
    return {{"shape", t.shape}, {"data", t.data}};
}

inline Tensor tensor_from_json(const nlohmann::json& j) {
    Tensor t;
    t.shape = j.at("shape").get<std::vector<int>>();
    t.data = j.at("data").get<std::vector<float>>();
    return t;
}

inline nlohmann::ordered_json dense_to_json(const DenseNetT<float>& net) {
    nlohmann::ordered_json arch;
    std::vector<int> sizes{net.input_size()};
    std::vector<std::string> acts;
    for (const DenseLayerT<float>& l : net.layers) {
        sizes.push_back(static_cast<int>(l.w.rows()));
        acts.push_back(activation_name(l.act));
    }
    arch["sizes"] = sizes;
    arch["activations"] = acts;

    nlohmann::ordered_json tensors;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const std::string prefix = "layer" + std::to_string(i);
        tensors[prefix + ".w"] = tensor_to_json(to_tensor(net.layers[i].w));
        tensors[prefix + ".b"] = tensor_to_json(to_tensor(net.layers[i].b));
    }
    return {{"architecture", arch}, {"tensors", tensors}};
}

inline DenseNetT<float> dense_from_json(const nlohmann::json& j) {
    const auto sizes = j.at("architecture").at("sizes").get<std::vector<int>>();
    const auto acts = j.at("architecture").at("activations").get<std::vector<std::string>>();
    if (sizes.size() != acts.size() + 1) throw std::runtime_error("model: bad architecture");
    DenseNetT<float> net;
    for (std::size_t i = 0; i < acts.size(); ++i) {
        DenseLayerT<float> l;
        const std::string prefix = "layer" + std::to_string(i);
        l.w = from_tensor(tensor_from_json(j.at("tensors").at(prefix + ".w")));
        l.b = from_tensor(tensor_from_json(j.at("tensors").at(prefix + ".b")));
        l.act = activation_from_name(acts[i]);
        if (l.w.rows() != sizes[i + 1] || l.w.cols() != sizes[i] || l.b.rows() != sizes[i + 1]) {
            throw std::runtime_error("model: tensor shape does not match architecture");
        }
        net.layers.push_back(std::move(l));
    }
    return net;
}

inline nlohmann::ordered_json lstm_to_json(const LstmCellT<float>& cell) {
    nlohmann::ordered_json arch;
    arch["input_size"] = cell.input_size;
    arch["hidden_size"] = cell.hidden_size;
    nlohmann::ordered_json tensors;
    tensors["wx"] = tensor_to_json(to_tensor(cell.wx));
    tensors["wh"] = tensor_to_json(to_tensor(cell.wh));
    tensors["b"] = tensor_to_json(to_tensor(cell.b));
    return {{"architecture", arch}, {"tensors", tensors}};
}

inline LstmCellT<float> lstm_from_json(const nlohmann::json& j) {
    LstmCellT<float> cell;
    cell.input_size = j.at("architecture").at("input_size").get<int>();
    cell.hidden_size = j.at("architecture").at("hidden_size").get<int>();
    cell.wx = from_tensor(tensor_from_json(j.at("tensors").at("wx")));
    cell.wh = from_tensor(tensor_from_json(j.at("tensors").at("wh")));
    cell.b = from_tensor(tensor_from_json(j.at("tensors").at("b")));
    if (cell.wx.rows() != 4 * cell.hidden_size || cell.wx.cols() != cell.input_size ||
        cell.wh.rows() != 4 * cell.hidden_size || cell.wh.cols() != cell.hidden_size ||
        cell.b.rows() != 4 * cell.hidden_size || cell.b.cols() != 1) {
        throw std::runtime_error("model: lstm tensor shapes do not match architecture");
    }
    return cell;
}

constexpr int kModelFormatVersion = 1;

// Wraps a module-specific body into a versioned model document.
inline void save_model_file(const std::string& path, const std::string& kind,
                            const nlohmann::ordered_json& body) {
    nlohmann::ordered_json doc;
    doc["format_version"] = kModelFormatVersion;
    doc["kind"] = kind;
    for (const auto& [key, value] : body.items()) doc[key] = value;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write model file: " + path);
    f << doc.dump(1) << "\n";
}

inline nlohmann::json load_model_file(const std::string& path, const std::string& expected_kind) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read model file: " + path);
    nlohmann::json doc = nlohmann::json::parse(f);
    if (!doc.contains("format_version") ||
        doc.at("format_version").get<int>() != kModelFormatVersion) {
        throw std::runtime_error("model file version mismatch: " + path);
    }
    if (doc.at("kind").get<std::string>() != expected_kind) {
        throw std::runtime_error("model file kind mismatch: " + path + " (expected " +
                                 expected_kind + ")");
    }
    return doc;
}

using DenseNet = DenseNetT<float>;
using DenseLayer = DenseLayerT<float>;
using DenseGrads = DenseGradsT<float>;
using LstmCell = LstmCellT<float>;
using LstmCache = LstmCacheT<float>;
using LstmGrads = LstmGradsT<float>;
using Adam = AdamT<float>;
using MatF = Mat<float>;

}  // namespace crashsim::nn

#endif
