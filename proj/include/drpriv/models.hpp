#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drpriv/nn.hpp"
#include "drpriv/tensor.hpp"

namespace drpriv {

// Hidden-layer widths of the four networks. The layer counts and the
// activation pattern are fixed; only these sizes may be overridden.
struct ModelWidths {
    std::size_t g_conv1 = 8;    // generator conv channels, stage 1
    std::size_t g_conv2 = 16;   // generator conv channels, stage 2
    std::size_t g_dense = 128;  // generator hidden dense width
    std::size_t r_dense = 128;  // reconstructor hidden dense width
    std::size_t r_conv = 8;     // reconstructor mid tconv channels
    std::size_t d1 = 256, d2 = 128, d3 = 64;  // discriminator hidden widths
    std::size_t c1 = 64, c2 = 64, c3 = 32;    // classifier hidden widths
};

// The four AutoGAN-DRP networks plus their parameters. The deployable
// transform F is the generator part; R is the reconstructor the privacy
// measure is judged against.
struct ModelBundle {
    NetworkSpec generator;
    NetworkSpec reconstructor;
    NetworkSpec discriminator;
    NetworkSpec classifier;
    ParamSet gen_params;
    ParamSet rec_params;
    ParamSet disc_params;
    ParamSet cls_params;
    std::size_t d_prime = 0;
    std::size_t image_h = 0;
    std::size_t image_w = 0;
    int num_levels = 1;
    ModelWidths widths;
    std::uint64_t init_seed = 0;
    std::string config_hash;  // hex digest of the architecture configuration
};

// The individual network architectures. The reconstructor's two
// stride-2 stages require h and w to be multiples of 4; anything else
// is an invalid shape composition.
NetworkSpec generator_spec(std::size_t h, std::size_t w, std::size_t d_prime,
                           const ModelWidths& ws);
NetworkSpec reconstructor_spec(std::size_t h, std::size_t w, std::size_t d_prime,
                               const ModelWidths& ws);
NetworkSpec discriminator_spec(std::size_t h, std::size_t w, const ModelWidths& ws);
NetworkSpec classifier_spec(std::size_t d_prime, int m, const ModelWidths& ws);

// Build the four networks for (h, w) single-channel images, code width
// d_prime and m access levels.
ModelBundle build_models(std::size_t h, std::size_t w, std::size_t d_prime, int m,
                         const ModelWidths& widths, std::uint64_t seed);

inline ModelBundle build_models(std::size_t h, std::size_t w, std::size_t d_prime, int m,
                                std::uint64_t seed) {
    return build_models(h, w, d_prime, m, ModelWidths{}, seed);
}

// x' = F(x): (B,1,h,w) image batch -> (B,d_prime) code batch, entries in [-1,1].
Tensor transform(const ModelBundle& bundle, const Tensor& images);

// x^ = R(x'): (B,d_prime) code batch -> (B,1,h,w) image batch, entries in (0,1).
Tensor reconstruct(const ModelBundle& bundle, const Tensor& codes);

// d / d' where d = h*w.
double compression_ratio(const ModelBundle& bundle);

}  // namespace drpriv
