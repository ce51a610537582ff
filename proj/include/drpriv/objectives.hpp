#pragma once

#include "drpriv/tensor.hpp"

namespace drpriv {

enum class PenaltyDirection { cap, floor };

// Weights of the generator objective plus the exterior-penalty
// configuration. gamma_pen is deliberately a separate knob from gamma:
// the reconstruction term and the penalty multiplier play different
// roles even though both act on reconstruction quality.
struct LossWeights {
    double alpha = 1.0;      // classifier term
    double beta = 0.2;       // discriminator term
    double gamma = 0.01;     // reconstruction term
    double gamma_pen = 10.0; // penalty multiplier
    double epsilon = 0.03;   // distance target, per-pixel squared units
    PenaltyDirection penalty_direction = PenaltyDirection::cap;
};

// Mean over the batch of per-sample squared-error sums.
double reconstruction_loss(const Tensor& x, const Tensor& x_hat);
// Gradient with respect to x_hat.
Tensor reconstruction_loss_grad(const Tensor& x, const Tensor& x_hat);

// Cross entropy of one-hot targets vs predicted class probabilities,
// averaged over the batch; probabilities clamped to [1e-12, 1].
double classification_loss(const Tensor& y, const Tensor& y_hat);
Tensor classification_loss_grad(const Tensor& y, const Tensor& y_hat);

// Binary cross entropy, averaged over the batch; t entries in {0,1}.
double discriminator_loss(const Tensor& t, const Tensor& t_hat);
Tensor discriminator_loss_grad(const Tensor& t, const Tensor& t_hat);

// Mean over the batch of ||x - x_hat||^2 / pixel_count: the per-pixel
// normalized squared Euclidean distance the epsilon target refers to.
double per_pixel_distance(const Tensor& x, const Tensor& x_hat);
Tensor per_pixel_distance_grad(const Tensor& x, const Tensor& x_hat);

// Exterior penalty: cap form gamma_pen*max(0, dist - epsilon) penalizes
// exceeding epsilon; floor form gamma_pen*max(0, epsilon - dist)
// penalizes falling short of it.
double dr_penalty(double dist, const LossWeights& w);
// d(penalty)/d(dist); 0 at the kink.
double dr_penalty_grad(double dist, const LossWeights& w);

// alpha*l_c - beta*l_d - gamma*l_r + dr_penalty(dist, w).
double generator_objective(double l_c, double l_d, double l_r, double dist,
                           const LossWeights& w);

}  // namespace drpriv
