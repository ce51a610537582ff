#include "drpriv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace drpriv {

namespace {

constexpr std::uint64_t kSaltTrainLoop = 0x747261696e6c6fULL;

void validate_config(const TrainingConfig& cfg) {
    if (cfg.lr_r <= 0.0 || cfg.lr_d <= 0.0 || cfg.lr_c <= 0.0 || cfg.lr_g <= 0.0)
        throw std::invalid_argument("TrainingConfig: learning rates must be positive");
    if (cfg.batch_size < 1)
        throw std::invalid_argument("TrainingConfig: batch_size must be at least 1");
    if (cfg.target_cov <= 0.0)
        throw std::invalid_argument("TrainingConfig: target_cov must be positive");
    if (cfg.weights.alpha < 0.0 || cfg.weights.beta < 0.0 || cfg.weights.gamma < 0.0 ||
        cfg.weights.gamma_pen < 0.0 || cfg.weights.epsilon < 0.0)
        throw std::invalid_argument("TrainingConfig: loss weights must be non-negative");
}

void validate_dataset(const ImageDataset& ds, int m) {
    if (ds.images.empty()) throw std::invalid_argument("train: empty dataset");
    if (ds.num_levels != m)
        throw std::invalid_argument("train: dataset has " + std::to_string(ds.num_levels) +
                                    " access levels, expected " + std::to_string(m));
    std::set<int> seen;
    for (int label : ds.access_labels) {
        if (label < 0 || label >= m)
            throw std::invalid_argument("train: access label " + std::to_string(label) +
                                        " outside [0," + std::to_string(m) + ")");
        seen.insert(label);
    }
    if (static_cast<int>(seen.size()) != m)
        throw std::invalid_argument("train: labels span only " + std::to_string(seen.size()) +
                                    " of " + std::to_string(m) + " classes");
}

std::vector<std::size_t> sample_indices(RngStream& rng, std::size_t n, std::size_t count) {
    std::vector<std::size_t> idx(count);
    for (auto& i : idx) i = rng.index(n);
    return idx;
}

Tensor concat_batch(const Tensor& a, const Tensor& b) {
    std::vector<std::size_t> shape = a.shape();
    shape[0] += b.dim(0);
    Tensor out(shape);
    std::copy(a.vec().begin(), a.vec().end(), out.data());
    std::copy(b.vec().begin(), b.vec().end(), out.data() + a.size());
    return out;
}

Tensor batch_slice(const Tensor& t, std::size_t from, std::size_t count) {
    std::vector<std::size_t> shape = t.shape();
    const std::size_t stride = t.size() / t.dim(0);
    shape[0] = count;
    Tensor out(shape);
    std::copy(t.data() + from * stride, t.data() + (from + count) * stride, out.data());
    return out;
}

[[noreturn]] void divergence(const char* phase, std::size_t step) {
    throw DivergenceError(std::string("phase ") + phase + ": non-finite loss at step " +
                          std::to_string(step));
}

double phase_r(ModelBundle& b, const ImageDataset& data, const TrainingConfig& cfg,
               RngStream& rng) {
    double total = 0.0;
    for (std::size_t s = 0; s < cfg.steps_r; ++s) {
        const auto idx = sample_indices(rng, data.size(), cfg.batch_size);
        const Tensor x = pack_batch(data, idx);
        ForwardTrace gtrace;
        const Tensor codes =
            forward(b.generator, b.gen_params, x,
                    cfg.update_generator_in_r_phase ? &gtrace : nullptr);
        ForwardTrace rtrace;
        const Tensor recon = forward(b.reconstructor, b.rec_params, codes, &rtrace);
        const double loss = reconstruction_loss(x, recon);
        if (!std::isfinite(loss)) divergence("R", s);
        total += loss;

        BackwardResult br =
            backward(b.reconstructor, b.rec_params, rtrace, reconstruction_loss_grad(x, recon));
        if (cfg.update_generator_in_r_phase) {
            BackwardResult bg = backward(b.generator, b.gen_params, gtrace, br.input_grad);
            sgd_update(b.rec_params, br.param_grads, cfg.lr_r);
            sgd_update(b.gen_params, bg.param_grads, cfg.lr_r);
        } else {
            sgd_update(b.rec_params, br.param_grads, cfg.lr_r);
        }
    }
    return cfg.steps_r ? total / static_cast<double>(cfg.steps_r) : 0.0;
}

double phase_d(ModelBundle& b, const ImageDataset& data, const TargetSpec& ts,
               const TrainingConfig& cfg, RngStream& rng) {
    double total = 0.0;
    for (std::size_t s = 0; s < cfg.steps_d; ++s) {
        const auto idx = sample_indices(rng, data.size(), cfg.batch_size);
        const Tensor x = pack_batch(data, idx);
        const Tensor targets = sample_target_batch(ts, cfg.batch_size, rng);
        const Tensor recon =
            forward(b.reconstructor, b.rec_params, forward(b.generator, b.gen_params, x));

        const Tensor mixed = concat_batch(targets, recon);
        Tensor labels({2 * cfg.batch_size, 1});
        for (std::size_t i = 0; i < cfg.batch_size; ++i) labels[i] = 1.0;

        ForwardTrace dtrace;
        const Tensor probs = forward(b.discriminator, b.disc_params, mixed, &dtrace);
        const double loss = discriminator_loss(labels, probs);
        if (!std::isfinite(loss)) divergence("D", s);
        total += loss;

        BackwardResult bd = backward(b.discriminator, b.disc_params, dtrace,
                                     discriminator_loss_grad(labels, probs));
        sgd_update(b.disc_params, bd.param_grads, cfg.lr_d);
    }
    return cfg.steps_d ? total / static_cast<double>(cfg.steps_d) : 0.0;
}

double phase_c(ModelBundle& b, const ImageDataset& data, const TrainingConfig& cfg,
               RngStream& rng) {
    double total = 0.0;
    for (std::size_t s = 0; s < cfg.steps_c; ++s) {
        const auto idx = sample_indices(rng, data.size(), cfg.batch_size);
        const Tensor x = pack_batch(data, idx);
        const Tensor y = pack_labels_one_hot(data, idx);
        const Tensor codes = forward(b.generator, b.gen_params, x);

        ForwardTrace ctrace;
        const Tensor probs = forward(b.classifier, b.cls_params, codes, &ctrace);
        const double loss = classification_loss(y, probs);
        if (!std::isfinite(loss)) divergence("C", s);
        total += loss;

        BackwardResult bc = backward(b.classifier, b.cls_params, ctrace,
                                     classification_loss_grad(y, probs));
        sgd_update(b.cls_params, bc.param_grads, cfg.lr_c);
    }
    return cfg.steps_c ? total / static_cast<double>(cfg.steps_c) : 0.0;
}

double phase_g(ModelBundle& b, const ImageDataset& data, const TargetSpec& ts,
               const TrainingConfig& cfg, RngStream& rng) {
    const LossWeights& w = cfg.weights;
    double total = 0.0;
    for (std::size_t s = 0; s < cfg.steps_g; ++s) {
        const auto idx = sample_indices(rng, data.size(), cfg.batch_size);
        const Tensor x = pack_batch(data, idx);
        const Tensor y = pack_labels_one_hot(data, idx);
        const Tensor targets = sample_target_batch(ts, cfg.batch_size, rng);

        ForwardTrace gtrace;
        const Tensor codes = forward(b.generator, b.gen_params, x, &gtrace);
        ForwardTrace ctrace;
        const Tensor probs = forward(b.classifier, b.cls_params, codes, &ctrace);
        ForwardTrace rtrace;
        const Tensor recon = forward(b.reconstructor, b.rec_params, codes, &rtrace);

        const double l_c = classification_loss(y, probs);
        const double l_r = reconstruction_loss(x, recon);
        const double dist = per_pixel_distance(x, recon);

        const Tensor mixed = concat_batch(targets, recon);
        Tensor labels({2 * cfg.batch_size, 1});
        for (std::size_t i = 0; i < cfg.batch_size; ++i) labels[i] = 1.0;
        ForwardTrace dtrace;
        const Tensor dprobs = forward(b.discriminator, b.disc_params, mixed, &dtrace);
        const double l_d = discriminator_loss(labels, dprobs);

        const double loss = generator_objective(l_c, l_d, l_r, dist, w);
        if (!std::isfinite(loss)) divergence("G", s);
        total += loss;

        // Classifier path: alpha * dl_c/dcode with phi frozen.
        const Tensor g_codes_c = backward(b.classifier, b.cls_params, ctrace,
                                          classification_loss_grad(y, probs))
                                     .input_grad;

        // Reconstruction path: -beta*l_d - gamma*l_r + penalty, all of whose
        // theta-dependence flows through the reconstructed images.
        const Tensor g_recon_d = batch_slice(backward(b.discriminator, b.disc_params, dtrace,
                                                      discriminator_loss_grad(labels, dprobs))
                                                 .input_grad,
                                             cfg.batch_size, cfg.batch_size);
        const Tensor g_recon_r = reconstruction_loss_grad(x, recon);
        const Tensor g_recon_dist = per_pixel_distance_grad(x, recon);
        const double pen_slope = dr_penalty_grad(dist, w);

        Tensor g_recon(recon.shape());
        for (std::size_t i = 0; i < g_recon.size(); ++i)
            g_recon[i] = -w.beta * g_recon_d[i] - w.gamma * g_recon_r[i] +
                         pen_slope * g_recon_dist[i];

        const Tensor g_codes_r =
            backward(b.reconstructor, b.rec_params, rtrace, g_recon).input_grad;

        Tensor g_codes(codes.shape());
        for (std::size_t i = 0; i < g_codes.size(); ++i)
            g_codes[i] = w.alpha * g_codes_c[i] + g_codes_r[i];

        BackwardResult bg = backward(b.generator, b.gen_params, gtrace, g_codes);
        sgd_update(b.gen_params, bg.param_grads, cfg.lr_g);
    }
    return cfg.steps_g ? total / static_cast<double>(cfg.steps_g) : 0.0;
}

double max_abs_delta(const ParamSet& now, const ParamSet& before) {
    double mx = 0.0;
    for (const auto& [name, t] : now.tensors) {
        const Tensor& prev = before.at(name);
        for (std::size_t i = 0; i < t.size(); ++i) mx = std::max(mx, std::abs(t[i] - prev[i]));
    }
    return mx;
}

}  // namespace

TargetSpec make_target_spec(const ImageDataset& train_data, double cov) {
    if (cov <= 0.0) throw std::invalid_argument("make_target_spec: cov must be positive");
    return TargetSpec{mean_image(train_data), cov};
}

Tensor sample_target_batch(const TargetSpec& ts, std::size_t batch_size, RngStream& rng) {
    if (batch_size < 1) throw std::invalid_argument("sample_target_batch: batch_size >= 1");
    if (ts.cov <= 0.0) throw std::invalid_argument("sample_target_batch: cov must be positive");
    const std::size_t h = ts.mean.dim(0), w = ts.mean.dim(1);
    const double sd = std::sqrt(ts.cov);
    Tensor batch({batch_size, 1, h, w});
    const std::size_t px = h * w;
    for (std::size_t n = 0; n < batch_size; ++n)
        for (std::size_t p = 0; p < px; ++p)
            batch[n * px + p] = std::clamp(ts.mean[p] + sd * rng.normal(), 0.0, 1.0);
    return batch;
}

double run_phase(Phase phase, ModelBundle& bundle, const ImageDataset& train_data,
                 const TargetSpec& ts, const TrainingConfig& cfg, RngStream& rng) {
    if (train_data.images.empty()) throw std::invalid_argument("run_phase: empty dataset");
    switch (phase) {
        case Phase::R: return phase_r(bundle, train_data, cfg, rng);
        case Phase::D: return phase_d(bundle, train_data, ts, cfg, rng);
        case Phase::C: return phase_c(bundle, train_data, cfg, rng);
        case Phase::G: return phase_g(bundle, train_data, ts, cfg, rng);
    }
    throw std::logic_error("run_phase: unknown phase");
}

bool convergence_check(const TrainingHistory& history, double tol) {
    if (history.empty())
        throw std::invalid_argument("convergence_check: history must have at least one record");
    return history.back().max_param_delta < tol;
}

TrainerState init_trainer(const ImageDataset& train_data, const TrainingConfig& cfg,
                          std::size_t d_prime, int m, const ModelWidths& widths) {
    validate_config(cfg);
    validate_dataset(train_data, m);
    TrainerState st{
        build_models(train_data.height, train_data.width, d_prime, m, widths, cfg.seed),
        cfg,
        make_target_spec(train_data, cfg.target_cov),
        {},
        RngStream(mix_seed(cfg.seed, kSaltTrainLoop)),
    };
    return st;
}

std::size_t advance(TrainerState& st, const ImageDataset& train_data, std::size_t max_iters) {
    validate_dataset(train_data, st.bundle.num_levels);
    const TrainingConfig& cfg = st.cfg;
    std::size_t executed = 0;
    while (st.history.size() < cfg.global_iters && executed < max_iters) {
        const std::size_t iter = st.history.size();
        const ParamSet snap_g = st.bundle.gen_params;
        const ParamSet snap_r = st.bundle.rec_params;
        const ParamSet snap_d = st.bundle.disc_params;
        const ParamSet snap_c = st.bundle.cls_params;

        IterationRecord rec;
        try {
            rec.l_r = run_phase(Phase::R, st.bundle, train_data, st.target, cfg, st.rng);
            rec.l_d = run_phase(Phase::D, st.bundle, train_data, st.target, cfg, st.rng);
            rec.l_c = run_phase(Phase::C, st.bundle, train_data, st.target, cfg, st.rng);
            rec.l_g = run_phase(Phase::G, st.bundle, train_data, st.target, cfg, st.rng);

            const auto idx = sample_indices(st.rng, train_data.size(), cfg.batch_size);
            const Tensor x = pack_batch(train_data, idx);
            const Tensor recon = reconstruct(st.bundle, transform(st.bundle, x));
            rec.mean_distance = per_pixel_distance(x, recon);
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " (global iteration " +
                                  std::to_string(iter + 1) + ")");
        }

        rec.max_param_delta = std::max(
            std::max(max_abs_delta(st.bundle.gen_params, snap_g),
                     max_abs_delta(st.bundle.rec_params, snap_r)),
            std::max(max_abs_delta(st.bundle.disc_params, snap_d),
                     max_abs_delta(st.bundle.cls_params, snap_c)));

        st.history.push_back(rec);
        ++executed;
        if (convergence_check(st.history, cfg.convergence_tol)) break;
    }
    return executed;
}

TrainResult train(const ImageDataset& train_data, const TrainingConfig& cfg, std::size_t d_prime,
                  int m, const ModelWidths& widths) {
    TrainerState st = init_trainer(train_data, cfg, d_prime, m, widths);
    advance(st, train_data, cfg.global_iters);
    return TrainResult{std::move(st.bundle), std::move(st.history)};
}

Checkpoint make_checkpoint(const TrainerState& st) {
    Checkpoint ckpt;
    ckpt.bundle = st.bundle;
    ckpt.config = st.cfg;
    ckpt.target = st.target;
    ckpt.history = st.history;
    ckpt.rng_state = st.rng.save_state();
    return ckpt;
}

TrainerState resume_state(const Checkpoint& ckpt) {
    TrainerState st{ckpt.bundle, ckpt.config, ckpt.target, ckpt.history, RngStream(0)};
    st.rng.restore_state(ckpt.rng_state);
    return st;
}

}  // namespace drpriv
