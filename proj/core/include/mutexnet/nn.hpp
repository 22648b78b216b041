#ifndef MUTEXNET_NN_HPP
#define MUTEXNET_NN_HPP

#include <memory>
#include <string>
#include <vector>

#include "mutexnet/losses.hpp"
#include "mutexnet/tensor.hpp"

namespace mutexnet {

/** One network layer: forward map, hand-derived backward map, and optional
 * parameters. Layers are stateless between calls; activations needed by
 * backward travel in the ForwardCache. */
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string kind() const = 0;

    /// Applies the layer to a batch (first dimension = batch).
    virtual Tensor forward(const Tensor& x) const = 0;

    /** Backpropagates dy (gradient w.r.t. this layer's output y) given the
     * input x it consumed. Returns the gradient w.r.t. x and appends the
     * per-parameter gradients (same order as params()) to param_grads. */
    virtual Tensor backward(const Tensor& x, const Tensor& y, const Tensor& dy,
                            std::vector<Tensor>& param_grads) const = 0;

    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<const Tensor*> params() const { return {}; }

    virtual std::unique_ptr<Layer> clone() const = 0;
};

class DenseLayer final : public Layer {
public:
    DenseLayer(std::size_t in, std::size_t out, Rng& rng);
    DenseLayer(Tensor weight, Tensor bias); // explicit parameters

    std::string kind() const override { return "dense"; }
    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& x, const Tensor& y, const Tensor& dy,
                    std::vector<Tensor>& param_grads) const override;
    std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
    std::vector<const Tensor*> params() const override { return {&weight_, &bias_}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<DenseLayer>(*this); }

    std::size_t in_size() const { return weight_.dim(0); }
    std::size_t out_size() const { return weight_.dim(1); }

private:
    Tensor weight_; // [in, out]
    Tensor bias_;   // [out]
};

/** Valid cross-correlation, stride 1, no padding. Input [batch, in_maps, H, W],
 * output [batch, out_maps, H - fh + 1, W - fw + 1]. */
class Conv2dLayer final : public Layer {
public:
    Conv2dLayer(std::size_t in_maps, std::size_t out_maps, std::size_t fh, std::size_t fw, Rng& rng);
    Conv2dLayer(Tensor weight, Tensor bias);

    std::string kind() const override { return "conv2d"; }
    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& x, const Tensor& y, const Tensor& dy,
                    std::vector<Tensor>& param_grads) const override;
    std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
    std::vector<const Tensor*> params() const override { return {&weight_, &bias_}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2dLayer>(*this); }

    std::size_t in_maps() const { return weight_.dim(1); }
    std::size_t out_maps() const { return weight_.dim(0); }
    std::size_t filter_h() const { return weight_.dim(2); }
    std::size_t filter_w() const { return weight_.dim(3); }

private:
    Tensor weight_; // [out_maps, in_maps, fh, fw]
    Tensor bias_;   // [out_maps]
};

class ReluLayer final : public Layer {
public:
    std::string kind() const override { return "relu"; }
    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& x, const Tensor& y, const Tensor& dy,
                    std::vector<Tensor>& param_grads) const override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<ReluLayer>(*this); }
};

class SigmoidLayer final : public Layer {
public:
    std::string kind() const override { return "sigmoid"; }
    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& x, const Tensor& y, const Tensor& dy,
                    std::vector<Tensor>& param_grads) const override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<SigmoidLayer>(*this); }
};

/// Row-wise softmax over the last dimension of a [batch x K] tensor.
class SoftmaxLayer final : public Layer {
public:
    std::string kind() const override { return "softmax"; }
    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& x, const Tensor& y, const Tensor& dy,
                    std::vector<Tensor>& param_grads) const override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<SoftmaxLayer>(*this); }
};

/// Per-layer activations recorded by forward() for use by backward():
/// acts[0] is the (reshaped) input, acts[i+1] the output of layer i.
struct ForwardCache {
    std::vector<Tensor> acts;
};

/** Ordered layer stack with a per-sample input shape and K output classes.
 * The final layer is the output head (sigmoid or softmax), so every
 * prediction row lies in [0,1]^K. */
class Network {
public:
    Network(std::vector<std::size_t> input_shape, std::size_t classes);
    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    void add(std::unique_ptr<Layer> layer);

    const std::vector<std::size_t>& input_shape() const { return input_shape_; }
    std::size_t input_size() const;
    std::size_t classes() const { return classes_; }
    std::size_t layer_count() const { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }
    Layer& layer(std::size_t i) { return *layers_[i]; }

    /// Flat copy of every parameter value, in layer order. Useful for
    /// bit-exact trajectory comparisons.
    std::vector<double> parameter_vector() const;

private:
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<std::size_t> input_shape_;
    std::size_t classes_;
};

/// Gradients (or velocities) mirroring a network's parameter tensors.
struct GradientSet {
    std::vector<std::vector<Tensor>> per_layer;

    static GradientSet zeros_like(const Network& net);
    void check_congruent(const Network& net) const;
};

/** Runs the batch through every layer. x is [batch x input_size] (flat rows
 * are reshaped to the network's input shape when the first layer needs it).
 * Returns the prediction tensor [batch x K] plus the activation cache. */
std::pair<Tensor, ForwardCache> forward(const Network& net, const Tensor& x);

/// Prediction only, cache discarded.
Tensor predict(const Network& net, const Tensor& x);

/** Chain rule from dL/df (gradient w.r.t. the head output) back through
 * every layer; returns gradients for all parameters. The cache must come
 * from a forward() call on this network with the matching batch. */
GradientSet backward(const Network& net, const ForwardCache& cache, const Tensor& dL_df);

/** SGD with optional momentum: v <- momentum * v - lr * g; w <- w + v.
 * Updates net and velocity in place. Requires lr > 0 and 0 <= momentum < 1. */
void sgd_step(Network& net, const GradientSet& grads, double lr, double momentum, GradientSet& velocity);

struct PresetOptions {
    std::size_t classes = 0; // 0 = preset default
    Head head = Head::sigmoid;
};

/** Builds one of the named architectures with freshly initialized weights:
 *   synthetic-mlp  dense(2->16) relu dense(16->K) head          (K default 3)
 *   mnist-conv     conv(1->20,7x7) relu conv(20->15,7x7) relu
 *                  dense(3840->256) relu dense(256->10) head
 *   mnist-dense    dense(784->256) relu dense(256->256) relu
 *                  dense(256->10) head
 * Weights are uniform in +-sqrt(6/(fan_in+fan_out)), biases zero. */
Network make_preset(const std::string& name, Rng& rng, const PresetOptions& opts = {});

/// Versioned JSON checkpoint; parameter values round-trip bit-exactly.
void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

} // namespace mutexnet

#endif // MUTEXNET_NN_HPP
