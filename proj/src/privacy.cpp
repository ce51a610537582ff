#include "drpriv/privacy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "drpriv/objectives.hpp"
#include "drpriv/rng.hpp"

namespace drpriv {

namespace {

constexpr std::uint64_t kSaltAttackInit = 0x6174746163696eULL;
constexpr std::uint64_t kSaltAttackLoop = 0x617474616373ULL;

// Above this pixel count the covariance matrix is eigendecomposed via
// the n x n Gram matrix instead of the d x d covariance.
constexpr std::size_t kGramRouteThreshold = 512;

std::vector<std::size_t> range_indices(std::size_t from, std::size_t count) {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), from);
    return idx;
}

}  // namespace

BatchFn make_network_fn(NetworkSpec spec, ParamSet params) {
    return [spec = std::move(spec), params = std::move(params)](const Tensor& input) {
        return forward(spec, params, input);
    };
}

AttackerModel train_attacker(const NetworkSpec& gen_spec, const ParamSet& gen_params,
                             const ImageDataset& train_data, const AttackConfig& ac) {
    if (ac.steps < 1) throw std::invalid_argument("train_attacker: steps must be >= 1");
    if (ac.lr <= 0.0) throw std::invalid_argument("train_attacker: lr must be positive");
    if (ac.batch_size < 1) throw std::invalid_argument("train_attacker: batch_size must be >= 1");
    if (train_data.images.empty()) throw std::invalid_argument("train_attacker: empty dataset");

    const std::vector<std::size_t> image_shape{1, train_data.height, train_data.width};
    if (gen_spec.input_shape != image_shape)
        throw std::invalid_argument("train_attacker: transform input " +
                                    Tensor::shape_string(gen_spec.input_shape) +
                                    " does not match dataset images " +
                                    Tensor::shape_string(image_shape));
    if (gen_spec.output_shape.size() != 1)
        throw std::invalid_argument("train_attacker: transform must emit rank-1 codes");
    const std::size_t d_code = gen_spec.output_shape[0];

    AttackerModel attacker;
    if (ac.attacker_spec) {
        if (ac.attacker_spec->input_shape != std::vector<std::size_t>{d_code})
            throw std::invalid_argument("train_attacker: attacker input width must be " +
                                        std::to_string(d_code));
        if (ac.attacker_spec->output_shape != image_shape)
            throw std::invalid_argument("train_attacker: attacker output must match images " +
                                        Tensor::shape_string(image_shape));
        attacker.spec = *ac.attacker_spec;
    } else {
        attacker.spec =
            reconstructor_spec(train_data.height, train_data.width, d_code, ac.attacker_widths);
    }
    attacker.params = init_params(attacker.spec, mix_seed(ac.seed, kSaltAttackInit));

    RngStream rng(mix_seed(ac.seed, kSaltAttackLoop));
    for (std::size_t s = 0; s < ac.steps; ++s) {
        std::vector<std::size_t> idx(ac.batch_size);
        for (auto& i : idx) i = rng.index(train_data.size());
        const Tensor x = pack_batch(train_data, idx);
        const Tensor codes = forward(gen_spec, gen_params, x);

        ForwardTrace trace;
        const Tensor recon = forward(attacker.spec, attacker.params, codes, &trace);
        const double loss = reconstruction_loss(x, recon);
        if (!std::isfinite(loss))
            throw DivergenceError("train_attacker: non-finite loss at step " + std::to_string(s));
        if (s == 0) attacker.initial_loss = loss;
        attacker.final_loss = loss;

        BackwardResult br =
            backward(attacker.spec, attacker.params, trace, reconstruction_loss_grad(x, recon));
        sgd_update(attacker.params, br.param_grads, ac.lr);
    }
    return attacker;
}

PrivacyReport evaluate_epsilon_dr(const BatchFn& transform_fn, const BatchFn& reconstruct_fn,
                                  const ImageDataset& test_data, double epsilon,
                                  const std::string& attacker_kind) {
    if (test_data.images.empty())
        throw std::invalid_argument("evaluate_epsilon_dr: empty test set");
    if (epsilon < 0.0) throw std::invalid_argument("evaluate_epsilon_dr: negative epsilon");

    const std::size_t n = test_data.size();
    const std::size_t px = test_data.pixels();
    constexpr std::size_t kChunk = 64;

    double total = 0.0;
    for (std::size_t start = 0; start < n; start += kChunk) {
        const std::size_t count = std::min(kChunk, n - start);
        const Tensor x = pack_batch(test_data, range_indices(start, count));
        const Tensor recon = reconstruct_fn(transform_fn(x));
        if (!recon.same_shape(x))
            throw std::runtime_error("evaluate_epsilon_dr: reconstruction shape " +
                                     Tensor::shape_string(recon.shape()) +
                                     " does not match images " +
                                     Tensor::shape_string(x.shape()));
        for (std::size_t b = 0; b < count; ++b) {
            double sq = 0.0;
            for (std::size_t p = 0; p < px; ++p) {
                const double r = x[b * px + p] - recon[b * px + p];
                sq += r * r;
            }
            total += sq / static_cast<double>(px);
        }
    }

    PrivacyReport report;
    report.mean_distance = total / static_cast<double>(n);
    report.epsilon = epsilon;
    report.satisfied = report.mean_distance >= epsilon;
    report.attacker_kind = attacker_kind;
    report.n_test = n;
    return report;
}

LinearDR pca_fit(const ImageDataset& train_data, std::size_t k) {
    const std::size_t n = train_data.size();
    const std::size_t d = train_data.pixels();
    if (n < 2) throw std::invalid_argument("pca_fit: need at least 2 samples");
    if (k > d)
        throw std::invalid_argument("pca_fit: k=" + std::to_string(k) + " exceeds dimension " +
                                    std::to_string(d));

    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                train_data.images[i][j];

    const Eigen::RowVectorXd mu = X.colwise().mean();
    const Eigen::MatrixXd Xc = X.rowwise() - mu;

    LinearDR dr;
    dr.d = d;
    dr.k = k;
    dr.mean = Tensor({d});
    for (std::size_t j = 0; j < d; ++j) dr.mean[j] = mu(static_cast<Eigen::Index>(j));
    dr.eigenvalues.assign(d, 0.0);
    dr.basis = Tensor({k, d});

    if (d <= kGramRouteThreshold || d <= n) {
        const Eigen::MatrixXd C = (Xc.transpose() * Xc) / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        if (es.info() != Eigen::Success) throw std::runtime_error("pca_fit: eigensolver failed");
        for (std::size_t i = 0; i < d; ++i)
            dr.eigenvalues[i] =
                std::max(0.0, es.eigenvalues()(static_cast<Eigen::Index>(d - 1 - i)));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < d; ++j)
                dr.basis.at2(i, j) = es.eigenvectors()(static_cast<Eigen::Index>(j),
                                                       static_cast<Eigen::Index>(d - 1 - i));
    } else {
        // Gram route: the nonzero covariance spectrum equals the Gram
        // spectrum; eigenvectors are lifted through the data matrix.
        const Eigen::MatrixXd G = (Xc * Xc.transpose()) / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        if (es.info() != Eigen::Success) throw std::runtime_error("pca_fit: eigensolver failed");
        for (std::size_t i = 0; i < n && i < d; ++i)
            dr.eigenvalues[i] =
                std::max(0.0, es.eigenvalues()(static_cast<Eigen::Index>(n - 1 - i)));
        for (std::size_t i = 0; i < k; ++i) {
            if (i >= n || dr.eigenvalues[i] <= 1e-12)
                throw std::invalid_argument(
                    "pca_fit: k=" + std::to_string(k) +
                    " exceeds the positive-variance rank of the data (" + std::to_string(i) +
                    ")");
            Eigen::VectorXd u =
                Xc.transpose() * es.eigenvectors().col(static_cast<Eigen::Index>(n - 1 - i));
            u.normalize();
            for (std::size_t j = 0; j < d; ++j)
                dr.basis.at2(i, j) = u(static_cast<Eigen::Index>(j));
        }
    }
    return dr;
}

double pca_expected_residual(const std::vector<double>& spectrum, std::size_t k, std::size_t d) {
    if (spectrum.size() != d)
        throw std::invalid_argument("pca_expected_residual: spectrum length " +
                                    std::to_string(spectrum.size()) + " != d=" +
                                    std::to_string(d));
    if (k > d) throw std::invalid_argument("pca_expected_residual: k > d");
    for (std::size_t i = 1; i < spectrum.size(); ++i)
        if (spectrum[i] > spectrum[i - 1] + 1e-12)
            throw std::invalid_argument("pca_expected_residual: unsorted spectrum at index " +
                                        std::to_string(i));
    double tail = 0.0;
    for (std::size_t i = k; i < d; ++i) tail += spectrum[i];
    return tail / static_cast<double>(d);
}

Tensor pca_transform(const LinearDR& dr, const Tensor& images) {
    const std::size_t B = images.dim(0);
    if (images.size() / B != dr.d)
        throw std::invalid_argument("pca_transform: image size does not match fit dimension");
    Tensor codes({B, dr.k});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < dr.k; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dr.d; ++j)
                acc += dr.basis.at2(i, j) * (images[b * dr.d + j] - dr.mean[j]);
            codes.at2(b, i) = acc;
        }
    return codes;
}

Tensor pca_reconstruct(const LinearDR& dr, const Tensor& codes, std::size_t h, std::size_t w) {
    if (h * w != dr.d)
        throw std::invalid_argument("pca_reconstruct: h*w does not match fit dimension");
    const std::size_t B = codes.dim(0);
    if (codes.rank() != 2 || codes.dim(1) != dr.k)
        throw std::invalid_argument("pca_reconstruct: code width must be " +
                                    std::to_string(dr.k));
    Tensor images({B, 1, h, w});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t j = 0; j < dr.d; ++j) {
            double acc = dr.mean[j];
            for (std::size_t i = 0; i < dr.k; ++i)
                acc += dr.basis.at2(i, j) * codes.at2(b, i);
            images[b * dr.d + j] = acc;
        }
    return images;
}

BatchFn make_pca_transform_fn(LinearDR dr) {
    return [dr = std::move(dr)](const Tensor& images) { return pca_transform(dr, images); };
}

BatchFn make_pca_reconstruct_fn(LinearDR dr, std::size_t h, std::size_t w) {
    return [dr = std::move(dr), h, w](const Tensor& codes) {
        return pca_reconstruct(dr, codes, h, w);
    };
}

std::vector<ReconstructionPair> export_reconstruction_pairs(const BatchFn& transform_fn,
                                                            const BatchFn& reconstruct_fn,
                                                            const ImageDataset& test_data,
                                                            std::size_t count) {
    if (count > test_data.size())
        throw std::invalid_argument("export_reconstruction_pairs: count exceeds test size");
    std::vector<ReconstructionPair> pairs;
    if (count == 0) return pairs;

    const std::size_t h = test_data.height, w = test_data.width, px = h * w;
    const Tensor x = pack_batch(test_data, range_indices(0, count));
    const Tensor recon = reconstruct_fn(transform_fn(x));
    if (!recon.same_shape(x))
        throw std::runtime_error("export_reconstruction_pairs: reconstruction shape mismatch");

    pairs.reserve(count);
    for (std::size_t b = 0; b < count; ++b) {
        ReconstructionPair p{Tensor({h, w}), Tensor({h, w})};
        for (std::size_t i = 0; i < px; ++i) {
            p.original[i] = x[b * px + i];
            p.reconstruction[i] = recon[b * px + i];
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace drpriv
