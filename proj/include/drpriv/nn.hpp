#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "drpriv/tensor.hpp"

namespace drpriv {

// Thrown when a numeric update has gone non-finite.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LayerKind { dense, conv2d, tconv2d, tanh_act, sigmoid, softmax, flatten, reshape };

enum class Padding { valid, same };

struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    // dense
    std::size_t in = 0;
    std::size_t out = 0;
    // conv2d / tconv2d
    std::size_t in_ch = 0;
    std::size_t out_ch = 0;
    std::size_t kh = 0;
    std::size_t kw = 0;
    std::size_t stride = 1;
    Padding padding = Padding::valid;
    // reshape
    std::vector<std::size_t> target_shape;

    static LayerSpec dense(std::size_t in, std::size_t out);
    static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw,
                            std::size_t stride, Padding padding);
    static LayerSpec tconv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw,
                             std::size_t stride, Padding padding);
    static LayerSpec tanh();
    static LayerSpec sigmoid();
    static LayerSpec softmax();
    static LayerSpec flatten();
    static LayerSpec reshape(std::vector<std::size_t> target_shape);

    bool parameterized() const {
        return kind == LayerKind::dense || kind == LayerKind::conv2d || kind == LayerKind::tconv2d;
    }
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    std::vector<std::size_t> input_shape;   // per sample, no batch dim
    std::vector<std::size_t> output_shape;  // per sample, no batch dim
    // shapes[0] = input_shape, shapes[i] = output of layer i-1.
    std::vector<std::vector<std::size_t>> shapes;

    std::size_t num_params() const;
};

// Validates that adjacent layer shapes compose; throws std::invalid_argument
// naming the offending layer otherwise.
NetworkSpec build_network(std::vector<std::size_t> input_shape, std::vector<LayerSpec> layers);

struct ParamSet {
    std::map<std::string, Tensor> tensors;

    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    std::size_t total_size() const;
};

// Names follow "layer<i>.weight" / "layer<i>.bias".
std::string weight_name(std::size_t layer_index);
std::string bias_name(std::size_t layer_index);

// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases,
// deterministic in the seed.
ParamSet init_params(const NetworkSpec& net, std::uint64_t seed);

struct ForwardTrace {
    // activations[0] is the input batch; activations[i+1] the output of layer i.
    std::vector<Tensor> activations;
};

// Returns the output batch; if trace is non-null it is filled with all
// intermediate activations needed by backward().
Tensor forward(const NetworkSpec& net, const ParamSet& params, const Tensor& input,
               ForwardTrace* trace = nullptr);

struct BackwardResult {
    Tensor input_grad;
    ParamSet param_grads;  // same names and shapes as the network's ParamSet
};

// Exact reverse-mode gradients of the scalar whose output gradient is
// output_grad, evaluated at the activations recorded in trace.
BackwardResult backward(const NetworkSpec& net, const ParamSet& params, const ForwardTrace& trace,
                        const Tensor& output_grad);

// In-place p <- p - lr*g. Throws DivergenceError on non-finite gradients.
void sgd_update(ParamSet& params, const ParamSet& grads, double lr);

struct FiniteDiffReport {
    double max_rel_err = 0.0;
    bool pass = false;
};

// Compares backward() gradients of sum(output) against central finite
// differences (step 1e-5) over every parameter and input entry.
// gradient_scale multiplies the analytic gradients before comparison;
// values other than 1.0 deliberately inject a fault (negative control).
FiniteDiffReport finite_diff_check(const NetworkSpec& net, const ParamSet& params,
                                   const Tensor& input, double tol,
                                   double gradient_scale = 1.0);

}  // namespace drpriv
