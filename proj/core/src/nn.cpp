#include "mutexnet/nn.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace mutexnet {

namespace {

using nlohmann::json;

/// Symmetric uniform init with a = sqrt(6 / (fan_in + fan_out)), biases zero.
Tensor glorot_uniform(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return rand_uniform(rng, std::move(shape), -a, a);
}

double stable_sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void require_rank(const Tensor& t, std::size_t rank, const char* who) {
    if (t.rank() != rank) {
        throw std::invalid_argument(std::string(who) + ": expected rank-" + std::to_string(rank) +
                                    " input, got shape " + t.shape_str());
    }
}

} // namespace

// ---------------------------------------------------------------- DenseLayer

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Rng& rng)
    : weight_(glorot_uniform(rng, {in, out}, in, out)), bias_(Tensor::zeros({out})) {}

DenseLayer::DenseLayer(Tensor weight, Tensor bias) : weight_(std::move(weight)), bias_(std::move(bias)) {
    if (weight_.rank() != 2 || bias_.rank() != 1 || bias_.dim(0) != weight_.dim(1)) {
        throw std::invalid_argument("DenseLayer: weight " + weight_.shape_str() + " and bias " + bias_.shape_str() +
                                    " are not a [in, out] / [out] pair");
    }
}

Tensor DenseLayer::forward(const Tensor& x) const {
    require_rank(x, 2, "dense forward");
    const std::size_t batch = x.dim(0), in = weight_.dim(0), out = weight_.dim(1);
    if (x.dim(1) != in) {
        throw std::invalid_argument("dense forward: input width " + std::to_string(x.dim(1)) +
                                    " != layer input size " + std::to_string(in));
    }
    std::vector<double> y(batch * out);
    const double* px = x.data();
    const double* pw = weight_.data();
    const double* pb = bias_.data();
    for (std::size_t i = 0; i < batch; ++i) {
        double* yrow = &y[i * out];
        for (std::size_t k = 0; k < out; ++k) yrow[k] = pb[k];
        for (std::size_t j = 0; j < in; ++j) {
            const double xij = px[i * in + j];
            const double* wrow = &pw[j * out];
            for (std::size_t k = 0; k < out; ++k) yrow[k] += xij * wrow[k];
        }
    }
    return Tensor::from_raw({batch, out}, std::move(y));
}

Tensor DenseLayer::backward(const Tensor& x, const Tensor& /*y*/, const Tensor& dy,
                            std::vector<Tensor>& param_grads) const {
    const std::size_t batch = x.dim(0), in = weight_.dim(0), out = weight_.dim(1);
    std::vector<double> dx(batch * in);
    std::vector<double> dw(in * out, 0.0);
    std::vector<double> db(out, 0.0);
    const double* px = x.data();
    const double* pw = weight_.data();
    const double* pdy = dy.data();

    for (std::size_t i = 0; i < batch; ++i) {
        const double* dyrow = &pdy[i * out];
        for (std::size_t j = 0; j < in; ++j) {
            const double* wrow = &pw[j * out];
            double acc = 0.0;
            for (std::size_t k = 0; k < out; ++k) acc += dyrow[k] * wrow[k];
            dx[i * in + j] = acc;
        }
        for (std::size_t j = 0; j < in; ++j) {
            const double xij = px[i * in + j];
            double* dwrow = &dw[j * out];
            for (std::size_t k = 0; k < out; ++k) dwrow[k] += xij * dyrow[k];
        }
        for (std::size_t k = 0; k < out; ++k) db[k] += dyrow[k];
    }
    param_grads.push_back(Tensor::from_raw({in, out}, std::move(dw)));
    param_grads.push_back(Tensor::from_raw({out}, std::move(db)));
    return Tensor::from_raw({batch, in}, std::move(dx));
}

// --------------------------------------------------------------- Conv2dLayer

Conv2dLayer::Conv2dLayer(std::size_t in_maps, std::size_t out_maps, std::size_t fh, std::size_t fw, Rng& rng)
    : weight_(glorot_uniform(rng, {out_maps, in_maps, fh, fw}, in_maps * fh * fw, out_maps * fh * fw)),
      bias_(Tensor::zeros({out_maps})) {}

Conv2dLayer::Conv2dLayer(Tensor weight, Tensor bias) : weight_(std::move(weight)), bias_(std::move(bias)) {
    if (weight_.rank() != 4 || bias_.rank() != 1 || bias_.dim(0) != weight_.dim(0)) {
        throw std::invalid_argument("Conv2dLayer: weight " + weight_.shape_str() + " and bias " + bias_.shape_str() +
                                    " are not a [out, in, fh, fw] / [out] pair");
    }
}

Tensor Conv2dLayer::forward(const Tensor& x) const {
    require_rank(x, 4, "conv2d forward");
    const std::size_t batch = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t O = weight_.dim(0), fh = weight_.dim(2), fw = weight_.dim(3);
    if (C != weight_.dim(1)) {
        throw std::invalid_argument("conv2d forward: input has " + std::to_string(C) + " maps, filters expect " +
                                    std::to_string(weight_.dim(1)));
    }
    if (H < fh || W < fw) {
        throw std::invalid_argument("conv2d forward: " + std::to_string(fh) + "x" + std::to_string(fw) +
                                    " filter does not fit input " + x.shape_str());
    }
    const std::size_t OH = H - fh + 1, OW = W - fw + 1;
    std::vector<double> y(batch * O * OH * OW);
    const double* px = x.data();
    const double* pw = weight_.data();

    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < O; ++o) {
            double* ymap = &y[(b * O + o) * OH * OW];
            const double bias = bias_[o];
            for (std::size_t i = 0; i < OH * OW; ++i) ymap[i] = bias;
            for (std::size_t c = 0; c < C; ++c) {
                const double* xmap = &px[(b * C + c) * H * W];
                const double* wmap = &pw[((o * C + c) * fh) * fw];
                for (std::size_t u = 0; u < fh; ++u) {
                    for (std::size_t v = 0; v < fw; ++v) {
                        const double wv = wmap[u * fw + v];
                        for (std::size_t yy = 0; yy < OH; ++yy) {
                            const double* xrow = &xmap[(yy + u) * W + v];
                            double* yrow = &ymap[yy * OW];
                            for (std::size_t xx = 0; xx < OW; ++xx) yrow[xx] += wv * xrow[xx];
                        }
                    }
                }
            }
        }
    }
    return Tensor::from_raw({batch, O, OH, OW}, std::move(y));
}

Tensor Conv2dLayer::backward(const Tensor& x, const Tensor& y, const Tensor& dy,
                             std::vector<Tensor>& param_grads) const {
    const std::size_t batch = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t O = y.dim(1), OH = y.dim(2), OW = y.dim(3);
    const std::size_t fh = weight_.dim(2), fw = weight_.dim(3);

    std::vector<double> dx(batch * C * H * W, 0.0);
    std::vector<double> dw(weight_.size(), 0.0);
    std::vector<double> db(O, 0.0);
    const double* px = x.data();
    const double* pw = weight_.data();
    const double* pdy = dy.data();

    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < O; ++o) {
            const double* dymap = &pdy[(b * O + o) * OH * OW];
            for (std::size_t i = 0; i < OH * OW; ++i) db[o] += dymap[i];
            for (std::size_t c = 0; c < C; ++c) {
                const double* xmap = &px[(b * C + c) * H * W];
                double* dxmap = &dx[(b * C + c) * H * W];
                const double* wmap = &pw[((o * C + c) * fh) * fw];
                double* dwmap = &dw[((o * C + c) * fh) * fw];
                for (std::size_t u = 0; u < fh; ++u) {
                    for (std::size_t v = 0; v < fw; ++v) {
                        const double wv = wmap[u * fw + v];
                        double dw_acc = 0.0;
                        for (std::size_t yy = 0; yy < OH; ++yy) {
                            const double* dyrow = &dymap[yy * OW];
                            const double* xrow = &xmap[(yy + u) * W + v];
                            double* dxrow = &dxmap[(yy + u) * W + v];
                            for (std::size_t xx = 0; xx < OW; ++xx) {
                                dw_acc += dyrow[xx] * xrow[xx];
                                dxrow[xx] += dyrow[xx] * wv;
                            }
                        }
                        dwmap[u * fw + v] += dw_acc;
                    }
                }
            }
        }
    }
    param_grads.push_back(Tensor::from_raw(weight_.shape(), std::move(dw)));
    param_grads.push_back(Tensor::from_raw({O}, std::move(db)));
    return Tensor::from_raw({batch, C, H, W}, std::move(dx));
}

// ------------------------------------------------------------- activations

Tensor ReluLayer::forward(const Tensor& x) const {
    return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor ReluLayer::backward(const Tensor& x, const Tensor& /*y*/, const Tensor& dy,
                           std::vector<Tensor>& /*param_grads*/) const {
    std::vector<double> dx(x.size());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
    return Tensor::from_raw(x.shape(), std::move(dx));
}

Tensor SigmoidLayer::forward(const Tensor& x) const {
    return map(x, stable_sigmoid);
}

Tensor SigmoidLayer::backward(const Tensor& /*x*/, const Tensor& y, const Tensor& dy,
                              std::vector<Tensor>& /*param_grads*/) const {
    std::vector<double> dx(y.size());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
    return Tensor::from_raw(y.shape(), std::move(dx));
}

Tensor SoftmaxLayer::forward(const Tensor& x) const {
    require_rank(x, 2, "softmax forward");
    const std::size_t rows = x.dim(0), K = x.dim(1);
    std::vector<double> y(rows * K);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * K;
        double* yr = &y[r * K];
        double m = xr[0];
        for (std::size_t k = 1; k < K; ++k) m = std::max(m, xr[k]);
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            yr[k] = std::exp(xr[k] - m);
            sum += yr[k];
        }
        for (std::size_t k = 0; k < K; ++k) yr[k] /= sum;
    }
    return Tensor::from_raw({rows, K}, std::move(y));
}

Tensor SoftmaxLayer::backward(const Tensor& /*x*/, const Tensor& y, const Tensor& dy,
                              std::vector<Tensor>& /*param_grads*/) const {
    const std::size_t rows = y.dim(0), K = y.dim(1);
    std::vector<double> dx(rows * K);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* yr = y.data() + r * K;
        const double* dyr = dy.data() + r * K;
        double dot = 0.0;
        for (std::size_t k = 0; k < K; ++k) dot += dyr[k] * yr[k];
        for (std::size_t k = 0; k < K; ++k) dx[r * K + k] = yr[k] * (dyr[k] - dot);
    }
    return Tensor::from_raw({rows, K}, std::move(dx));
}

// ------------------------------------------------------------------ Network

Network::Network(std::vector<std::size_t> input_shape, std::size_t classes)
    : input_shape_(std::move(input_shape)), classes_(classes) {
    if (input_shape_.empty() || classes_ == 0) {
        throw std::invalid_argument("Network: input shape and class count must be nonempty/positive");
    }
}

Network::Network(const Network& other) : input_shape_(other.input_shape_), classes_(other.classes_) {
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
    if (this != &other) {
        Network tmp(other);
        *this = std::move(tmp);
    }
    return *this;
}

void Network::add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
}

std::size_t Network::input_size() const {
    std::size_t n = 1;
    for (std::size_t d : input_shape_) n *= d;
    return n;
}

std::vector<double> Network::parameter_vector() const {
    std::vector<double> out;
    for (const auto& l : layers_) {
        const Layer& layer = *l;
        for (const Tensor* p : layer.params()) {
            out.insert(out.end(), p->data(), p->data() + p->size());
        }
    }
    return out;
}

namespace {

/// The tensor a layer actually consumes: dense layers flatten higher-rank
/// activations to [batch, rest].
Tensor adapt_input_for(const Layer& layer, const Tensor& act) {
    if (layer.kind() == "dense" && act.rank() > 2) {
        std::size_t rest = 1;
        for (std::size_t i = 1; i < act.rank(); ++i) rest *= act.dim(i);
        return act.reshape({act.dim(0), rest});
    }
    return act;
}

} // namespace

std::pair<Tensor, ForwardCache> forward(const Network& net, const Tensor& x) {
    require_rank(x, 2, "forward");
    if (x.dim(1) != net.input_size()) {
        throw std::invalid_argument("forward: input width " + std::to_string(x.dim(1)) +
                                    " != network input size " + std::to_string(net.input_size()));
    }
    if (net.layer_count() == 0) throw std::logic_error("forward: network has no layers");

    ForwardCache cache;
    cache.acts.reserve(net.layer_count() + 1);

    Tensor first = x;
    if (net.input_shape().size() > 1) {
        std::vector<std::size_t> shaped{x.dim(0)};
        shaped.insert(shaped.end(), net.input_shape().begin(), net.input_shape().end());
        first = std::move(first).reshape(std::move(shaped));
    }
    cache.acts.push_back(std::move(first));

    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        const Layer& layer = net.layer(i);
        Tensor consumed = adapt_input_for(layer, cache.acts[i]);
        cache.acts.push_back(layer.forward(consumed));
    }
    return {cache.acts.back(), std::move(cache)};
}

Tensor predict(const Network& net, const Tensor& x) {
    return forward(net, x).first;
}

GradientSet backward(const Network& net, const ForwardCache& cache, const Tensor& dL_df) {
    if (cache.acts.size() != net.layer_count() + 1) {
        throw std::logic_error("backward: cache has " + std::to_string(cache.acts.size()) + " activations for " +
                               std::to_string(net.layer_count()) + " layers; stale or mismatched cache");
    }
    if (!dL_df.same_shape(cache.acts.back())) {
        throw std::logic_error("backward: dL/df shape " + dL_df.shape_str() + " != head output shape " +
                               cache.acts.back().shape_str());
    }

    GradientSet grads;
    grads.per_layer.resize(net.layer_count());

    Tensor g = dL_df;
    for (std::size_t i = net.layer_count(); i > 0; --i) {
        const std::size_t li = i - 1;
        const Layer& layer = net.layer(li);
        Tensor consumed = adapt_input_for(layer, cache.acts[li]);
        Tensor dx = layer.backward(consumed, cache.acts[li + 1], g, grads.per_layer[li]);
        // undo any flattening so the next layer down sees its own output shape
        g = std::move(dx).reshape(cache.acts[li].shape());
    }
    return grads;
}

GradientSet GradientSet::zeros_like(const Network& net) {
    GradientSet gs;
    gs.per_layer.resize(net.layer_count());
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        for (const Tensor* p : net.layer(i).params()) {
            gs.per_layer[i].push_back(Tensor::zeros(p->shape()));
        }
    }
    return gs;
}

void GradientSet::check_congruent(const Network& net) const {
    if (per_layer.size() != net.layer_count()) {
        throw std::logic_error("GradientSet: layer count mismatch");
    }
    for (std::size_t i = 0; i < per_layer.size(); ++i) {
        auto ps = net.layer(i).params();
        if (ps.size() != per_layer[i].size()) {
            throw std::logic_error("GradientSet: parameter count mismatch at layer " + std::to_string(i));
        }
        for (std::size_t j = 0; j < ps.size(); ++j) {
            if (!ps[j]->same_shape(per_layer[i][j])) {
                throw std::logic_error("GradientSet: shape mismatch at layer " + std::to_string(i));
            }
        }
    }
}

void sgd_step(Network& net, const GradientSet& grads, double lr, double momentum, GradientSet& velocity) {
    if (!(lr > 0.0)) {
        throw std::invalid_argument("sgd_step: lr must be > 0, got " + std::to_string(lr));
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw std::invalid_argument("sgd_step: momentum must be in [0, 1), got " + std::to_string(momentum));
    }
    grads.check_congruent(net);
    velocity.check_congruent(net);
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        auto ps = net.layer(i).params();
        for (std::size_t j = 0; j < ps.size(); ++j) {
            Tensor& w = *ps[j];
            Tensor& v = velocity.per_layer[i][j];
            const Tensor& g = grads.per_layer[i][j];
            for (std::size_t k = 0; k < w.size(); ++k) {
                v[k] = momentum * v[k] - lr * g[k];
                w[k] += v[k];
            }
        }
    }
}

// ------------------------------------------------------------------ presets

namespace {

std::unique_ptr<Layer> make_head(Head head) {
    if (head == Head::sigmoid) return std::make_unique<SigmoidLayer>();
    return std::make_unique<SoftmaxLayer>();
}

} // namespace

Network make_preset(const std::string& name, Rng& rng, const PresetOptions& opts) {
    if (name == "synthetic-mlp") {
        const std::size_t K = opts.classes ? opts.classes : 3;
        Network net({2}, K);
        net.add(std::make_unique<DenseLayer>(2, 16, rng));
        net.add(std::make_unique<ReluLayer>());
        net.add(std::make_unique<DenseLayer>(16, K, rng));
        net.add(make_head(opts.head));
        return net;
    }
    if (name == "mnist-conv") {
        const std::size_t K = opts.classes ? opts.classes : 10;
        Network net({1, 28, 28}, K);
        net.add(std::make_unique<Conv2dLayer>(1, 20, 7, 7, rng));  // -> 20 x 22 x 22
        net.add(std::make_unique<ReluLayer>());
        net.add(std::make_unique<Conv2dLayer>(20, 15, 7, 7, rng)); // -> 15 x 16 x 16
        net.add(std::make_unique<ReluLayer>());
        net.add(std::make_unique<DenseLayer>(15 * 16 * 16, 256, rng));
        net.add(std::make_unique<ReluLayer>());
        net.add(std::make_unique<DenseLayer>(256, K, rng));
        net.add(make_head(opts.head));
        return net;
    }
    if (name == "mnist-dense") {
        const std::size_t K = opts.classes ? opts.classes : 10;
        Network net({784}, K);
        net.add(std::make_unique<DenseLayer>(784, 256, rng));
        net.add(std::make_unique<ReluLayer>());
        net.add(std::make_unique<DenseLayer>(256, 256, rng));
        net.add(std::make_unique<ReluLayer>());
        net.add(std::make_unique<DenseLayer>(256, K, rng));
        net.add(make_head(opts.head));
        return net;
    }
    throw std::invalid_argument("make_preset: unknown preset '" + name +
                                "' (expected synthetic-mlp|mnist-conv|mnist-dense)");
}

// --------------------------------------------------------------- checkpoint

namespace {

json tensor_to_json(const Tensor& t) {
    return json{{"shape", t.shape()}, {"data", t.values()}};
}

Tensor tensor_from_json(const json& j) {
    return Tensor(j.at("shape").get<std::vector<std::size_t>>(), j.at("data").get<std::vector<double>>());
}

} // namespace

void save_checkpoint(const Network& net, const std::string& path) {
    json layers = json::array();
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        const Layer& l = net.layer(i);
        json jl{{"kind", l.kind()}};
        auto ps = l.params();
        if (ps.size() == 2) {
            jl["weight"] = tensor_to_json(*ps[0]);
            jl["bias"] = tensor_to_json(*ps[1]);
        }
        layers.push_back(std::move(jl));
    }
    json doc{
        {"format", "mutexnet-checkpoint"},
        {"version", 1},
        {"input_shape", net.input_shape()},
        {"classes", net.classes()},
        {"layers", std::move(layers)},
    };
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path + " for writing");
    out << doc.dump();
    if (!out) throw std::runtime_error("save_checkpoint: write to " + path + " failed");
}

Network load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("load_checkpoint: " + path + " is not valid JSON: " + e.what());
    }
    if (doc.value("format", "") != "mutexnet-checkpoint") {
        throw std::runtime_error("load_checkpoint: " + path + " is not a mutexnet checkpoint");
    }
    if (doc.value("version", 0) != 1) {
        throw std::runtime_error("load_checkpoint: unsupported checkpoint version " +
                                 std::to_string(doc.value("version", 0)));
    }

    Network net(doc.at("input_shape").get<std::vector<std::size_t>>(), doc.at("classes").get<std::size_t>());
    for (const json& jl : doc.at("layers")) {
        const std::string kind = jl.at("kind").get<std::string>();
        if (kind == "dense") {
            net.add(std::make_unique<DenseLayer>(tensor_from_json(jl.at("weight")), tensor_from_json(jl.at("bias"))));
        } else if (kind == "conv2d") {
            net.add(std::make_unique<Conv2dLayer>(tensor_from_json(jl.at("weight")), tensor_from_json(jl.at("bias"))));
        } else if (kind == "relu") {
            net.add(std::make_unique<ReluLayer>());
        } else if (kind == "sigmoid") {
            net.add(std::make_unique<SigmoidLayer>());
        } else if (kind == "softmax") {
            net.add(std::make_unique<SoftmaxLayer>());
        } else {
            throw std::runtime_error("load_checkpoint: unknown layer kind '" + kind + "'");
        }
    }
    return net;
}

} // namespace mutexnet
