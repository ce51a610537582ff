#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "drpriv/dataset.hpp"
#include "drpriv/models.hpp"
#include "drpriv/nn.hpp"

namespace drpriv {

// Batch-to-batch map used so the evaluator works identically for neural
// transforms and the linear (PCA) validation baseline.
using BatchFn = std::function<Tensor(const Tensor&)>;

// Wraps a frozen network (spec+params captured by value).
BatchFn make_network_fn(NetworkSpec spec, ParamSet params);

struct AttackConfig {
    std::size_t steps = 1000;
    double lr = 0.01;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    // Widths of the default attacker (the reconstructor family).
    ModelWidths attacker_widths;
    // Full architecture override; input must match the code width and
    // output the image shape. Used e.g. for linear attackers in tests.
    std::optional<NetworkSpec> attacker_spec;
};

struct AttackerModel {
    NetworkSpec spec;
    ParamSet params;
    double initial_loss = 0.0;  // pre-update loss of the first step
    double final_loss = 0.0;    // pre-update loss of the last step
};

// Trains a fresh reconstructor against the frozen transform on
// (transform(x), x) pairs drawn from train_data. The transform's
// parameters are never touched.
AttackerModel train_attacker(const NetworkSpec& gen_spec, const ParamSet& gen_params,
                             const ImageDataset& train_data, const AttackConfig& ac);

struct PrivacyReport {
    double mean_distance = 0.0;  // per-pixel squared units
    double epsilon = 0.0;
    bool satisfied = false;  // exactly mean_distance >= epsilon
    std::string attacker_kind = "fresh";  // in_loop | fresh | min
    std::size_t n_test = 0;
};

// Empirical estimate of E[dist(x, R(F(x)))] over the test set;
// satisfied is the epsilon-DR predicate with no tolerance.
PrivacyReport evaluate_epsilon_dr(const BatchFn& transform_fn, const BatchFn& reconstruct_fn,
                                  const ImageDataset& test_data, double epsilon,
                                  const std::string& attacker_kind = "fresh");

// Linear dimension reduction (PCA) used to validate the evaluator
// against the analytic residual formula.
struct LinearDR {
    Tensor mean;                      // (d)
    Tensor basis;                     // (k, d), orthonormal rows
    std::vector<double> eigenvalues;  // length d, non-increasing
    std::size_t d = 0;
    std::size_t k = 0;
};

LinearDR pca_fit(const ImageDataset& train_data, std::size_t k);

// (sum of eigenvalues beyond the first k) / d: the expected per-pixel
// squared reconstruction error of the top-k projector.
double pca_expected_residual(const std::vector<double>& spectrum, std::size_t k, std::size_t d);

Tensor pca_transform(const LinearDR& dr, const Tensor& images);  // (B,1,h,w) -> (B,k)
Tensor pca_reconstruct(const LinearDR& dr, const Tensor& codes, std::size_t h, std::size_t w);

BatchFn make_pca_transform_fn(LinearDR dr);
BatchFn make_pca_reconstruct_fn(LinearDR dr, std::size_t h, std::size_t w);

struct ReconstructionPair {
    Tensor original;        // (h, w)
    Tensor reconstruction;  // (h, w)
};

// First `count` test pairs in dataset order, for grid rendering.
std::vector<ReconstructionPair> export_reconstruction_pairs(const BatchFn& transform_fn,
                                                            const BatchFn& reconstruct_fn,
                                                            const ImageDataset& test_data,
                                                            std::size_t count);

}  // namespace drpriv
