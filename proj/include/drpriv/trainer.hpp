#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "drpriv/dataset.hpp"
#include "drpriv/models.hpp"
#include "drpriv/objectives.hpp"
#include "drpriv/rng.hpp"

namespace drpriv {

// Hyperparameters of the alternating four-phase training loop. The four
// learning rates / step counts map onto the method's alpha_r..alpha_g
// and n_r..n_g.
struct TrainingConfig {
    double lr_r = 0.01;
    double lr_d = 0.01;
    double lr_c = 0.01;
    double lr_g = 0.01;
    std::size_t steps_r = 300;
    std::size_t steps_d = 300;
    std::size_t steps_c = 300;
    std::size_t steps_g = 300;
    std::size_t global_iters = 1000;
    std::size_t batch_size = 32;
    LossWeights weights;
    double target_cov = 0.05;  // per-pixel variance of the target distribution
    std::uint64_t seed = 1;
    // The printed algorithm also updates the generator inside the R
    // phase; this flag keeps that behaviour switchable.
    bool update_generator_in_r_phase = true;
    double convergence_tol = 0.0;  // strict <; 0 disables early stopping
};

// Target distribution: isotropic Gaussian at the training-mean image,
// samples clamped to [0,1].
struct TargetSpec {
    Tensor mean;  // (h, w)
    double cov = 0.05;
};

TargetSpec make_target_spec(const ImageDataset& train_data, double cov);

struct IterationRecord {
    double l_r = 0.0;
    double l_d = 0.0;
    double l_c = 0.0;
    double l_g = 0.0;
    double mean_distance = 0.0;
    double max_param_delta = 0.0;
};
using TrainingHistory = std::vector<IterationRecord>;

enum class Phase { R, D, C, G };

// One (B,1,h,w) batch of clamp(mean + sqrt(cov)*normal, [0,1]) draws.
Tensor sample_target_batch(const TargetSpec& ts, std::size_t batch_size, RngStream& rng);

// Runs the given phase's step loop in place on the bundle and returns
// the mean of the per-step losses (each measured before that step's
// update). Only the phase's own parameter set changes, except that
// phase R also moves the generator when cfg.update_generator_in_r_phase
// is set. Throws DivergenceError naming the phase on non-finite loss.
double run_phase(Phase phase, ModelBundle& bundle, const ImageDataset& train_data,
                 const TargetSpec& ts, const TrainingConfig& cfg, RngStream& rng);

// True iff the latest record's max_param_delta is strictly below tol.
bool convergence_check(const TrainingHistory& history, double tol);

// Everything needed to continue a run: deterministic resumption state.
struct TrainerState {
    ModelBundle bundle;
    TrainingConfig cfg;
    TargetSpec target;
    TrainingHistory history;
    RngStream rng{0};
};

TrainerState init_trainer(const ImageDataset& train_data, const TrainingConfig& cfg,
                          std::size_t d_prime, int m, const ModelWidths& widths = ModelWidths{});

// Executes up to max_iters further global iterations, bounded by
// cfg.global_iters overall; stops early on convergence. Returns the
// number of iterations actually run. DivergenceError is annotated with
// the failing global iteration index.
std::size_t advance(TrainerState& st, const ImageDataset& train_data, std::size_t max_iters);

struct TrainResult {
    ModelBundle bundle;
    TrainingHistory history;
};

// Full training run: R, D, C, G phases per global iteration.
TrainResult train(const ImageDataset& train_data, const TrainingConfig& cfg, std::size_t d_prime,
                  int m, const ModelWidths& widths = ModelWidths{});

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::uint32_t format_version = kCheckpointVersion;
    ModelBundle bundle;
    TrainingConfig config;
    TargetSpec target;
    TrainingHistory history;
    std::string rng_state;
};

Checkpoint make_checkpoint(const TrainerState& st);
TrainerState resume_state(const Checkpoint& ckpt);

// Binary container: 8-byte magic, format version, named-tensor
// directory, structured-text config/history block, trailing checksum.
// Written atomically (temp file + rename).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace drpriv
