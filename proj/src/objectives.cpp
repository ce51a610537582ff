#include "drpriv/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drpriv {

namespace {

constexpr double kProbFloor = 1e-12;

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(who) + ": shape mismatch " +
                                    Tensor::shape_string(a.shape()) + " vs " +
                                    Tensor::shape_string(b.shape()));
}

std::size_t batch_of(const Tensor& t, const char* who) {
    if (t.rank() == 0 || t.dim(0) == 0)
        throw std::invalid_argument(std::string(who) + ": empty batch");
    return t.dim(0);
}

}  // namespace

double reconstruction_loss(const Tensor& x, const Tensor& x_hat) {
    require_same_shape(x, x_hat, "reconstruction_loss");
    const std::size_t B = batch_of(x, "reconstruction_loss");
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = x[i] - x_hat[i];
        total += r * r;
    }
    return total / static_cast<double>(B);
}

Tensor reconstruction_loss_grad(const Tensor& x, const Tensor& x_hat) {
    require_same_shape(x, x_hat, "reconstruction_loss_grad");
    const std::size_t B = batch_of(x, "reconstruction_loss_grad");
    Tensor g(x_hat.shape());
    const double scale = 2.0 / static_cast<double>(B);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * (x_hat[i] - x[i]);
    return g;
}

double classification_loss(const Tensor& y, const Tensor& y_hat) {
    require_same_shape(y, y_hat, "classification_loss");
    const std::size_t B = batch_of(y, "classification_loss");
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] != 0.0) total -= y[i] * std::log(std::clamp(y_hat[i], kProbFloor, 1.0));
    return total / static_cast<double>(B);
}

Tensor classification_loss_grad(const Tensor& y, const Tensor& y_hat) {
    require_same_shape(y, y_hat, "classification_loss_grad");
    const std::size_t B = batch_of(y, "classification_loss_grad");
    Tensor g(y_hat.shape());
    const double scale = 1.0 / static_cast<double>(B);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (y[i] != 0.0) g[i] = -scale * y[i] / std::clamp(y_hat[i], kProbFloor, 1.0);
    return g;
}

double discriminator_loss(const Tensor& t, const Tensor& t_hat) {
    require_same_shape(t, t_hat, "discriminator_loss");
    const std::size_t B = batch_of(t, "discriminator_loss");
    double total = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double p = std::clamp(t_hat[i], kProbFloor, 1.0 - kProbFloor);
        total -= t[i] * std::log(p) + (1.0 - t[i]) * std::log(1.0 - p);
    }
    return total / static_cast<double>(B);
}

Tensor discriminator_loss_grad(const Tensor& t, const Tensor& t_hat) {
    require_same_shape(t, t_hat, "discriminator_loss_grad");
    const std::size_t B = batch_of(t, "discriminator_loss_grad");
    Tensor g(t_hat.shape());
    const double scale = 1.0 / static_cast<double>(B);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double p = std::clamp(t_hat[i], kProbFloor, 1.0 - kProbFloor);
        g[i] = scale * (-t[i] / p + (1.0 - t[i]) / (1.0 - p));
    }
    return g;
}

double per_pixel_distance(const Tensor& x, const Tensor& x_hat) {
    require_same_shape(x, x_hat, "per_pixel_distance");
    const std::size_t B = batch_of(x, "per_pixel_distance");
    const std::size_t px = x.size() / B;
    return reconstruction_loss(x, x_hat) / static_cast<double>(px);
}

Tensor per_pixel_distance_grad(const Tensor& x, const Tensor& x_hat) {
    require_same_shape(x, x_hat, "per_pixel_distance_grad");
    const std::size_t B = batch_of(x, "per_pixel_distance_grad");
    const std::size_t px = x.size() / B;
    Tensor g = reconstruction_loss_grad(x, x_hat);
    const double inv = 1.0 / static_cast<double>(px);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= inv;
    return g;
}

double dr_penalty(double dist, const LossWeights& w) {
    if (dist < 0.0) throw std::invalid_argument("dr_penalty: negative distance");
    const double excess = w.penalty_direction == PenaltyDirection::cap ? dist - w.epsilon
                                                                       : w.epsilon - dist;
    return w.gamma_pen * std::max(0.0, excess);
}

double dr_penalty_grad(double dist, const LossWeights& w) {
    if (w.penalty_direction == PenaltyDirection::cap)
        return dist > w.epsilon ? w.gamma_pen : 0.0;
    return dist < w.epsilon ? -w.gamma_pen : 0.0;
}

double generator_objective(double l_c, double l_d, double l_r, double dist,
                           const LossWeights& w) {
    return w.alpha * l_c - w.beta * l_d - w.gamma * l_r + dr_penalty(dist, w);
}

}  // namespace drpriv
