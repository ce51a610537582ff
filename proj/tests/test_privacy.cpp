#include <doctest.h>

#include <cmath>
#include <vector>

#include "drpriv/privacy.hpp"
#include "test_util.hpp"

using namespace drpriv;

namespace {

ModelWidths slim_widths() {
    ModelWidths w;
    w.g_conv1 = 2;
    w.g_conv2 = 3;
    w.g_dense = 12;
    w.r_dense = 12;
    w.r_conv = 2;
    w.d1 = 10;
    w.d2 = 8;
    w.d3 = 6;
    w.c1 = 8;
    w.c2 = 6;
    w.c3 = 4;
    return w;
}

// Two-pixel images plus an identity transform: codes equal pixels, so a
// linear attacker can interpolate the data exactly.
struct ToyWorld {
    ImageDataset data;
    NetworkSpec gen;
    ParamSet gen_params;
    NetworkSpec attacker;
};

ToyWorld make_toy_world(std::size_t n = 30, std::uint64_t seed = 7) {
    ToyWorld w;
    w.data = testutil::random_dataset(n, 1, 2, 2, seed);
    w.gen = build_network({1, 1, 2}, {LayerSpec::flatten(), LayerSpec::dense(2, 2)});
    w.gen_params = init_params(w.gen, seed);
    Tensor& weight = w.gen_params.at("layer1.weight");
    weight[0] = 1.0;
    weight[1] = 0.0;
    weight[2] = 0.0;
    weight[3] = 1.0;
    w.attacker = build_network({2}, {LayerSpec::dense(2, 2), LayerSpec::reshape({1, 1, 2})});
    return w;
}

ImageDataset gaussian_cloud(std::size_t n, std::size_t h, std::size_t w, std::uint64_t seed) {
    ImageDataset ds;
    ds.name = "cloud";
    ds.height = h;
    ds.width = w;
    ds.num_levels = 2;
    RngStream rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> img(h * w);
        for (double& v : img) v = 0.5 + 0.12 * rng.normal();
        ds.images.push_back(std::move(img));
        ds.subject_ids.push_back(static_cast<int>(i % 4));
        ds.access_labels.push_back(static_cast<int>(i % 2));
    }
    return ds;
}

double empirical_pca_distance(const LinearDR& dr, const ImageDataset& ds) {
    const PrivacyReport rep =
        evaluate_epsilon_dr(make_pca_transform_fn(dr), make_pca_reconstruct_fn(dr, ds.height, ds.width),
                            ds, 0.0, "pca");
    return rep.mean_distance;
}

}  // namespace

TEST_CASE("make_network_fn matches a direct forward pass") {
    const ModelBundle bundle = build_models(8, 8, 2, 2, slim_widths(), 3);
    const ImageDataset ds = testutil::random_dataset(6, 8, 8, 2, 5);
    std::vector<std::size_t> idx(ds.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const Tensor batch = pack_batch(ds, idx);

    const BatchFn fn = make_network_fn(bundle.generator, bundle.gen_params);
    CHECK(testutil::tensors_equal(fn(batch),
                                  forward(bundle.generator, bundle.gen_params, batch)));
}

TEST_CASE("a linear attacker drives an identity transform to near-zero loss") {
    const ToyWorld w = make_toy_world();
    AttackConfig ac;
    ac.steps = 2000;
    ac.lr = 0.2;
    ac.batch_size = 15;
    ac.seed = 3;
    ac.attacker_spec = w.attacker;

    const AttackerModel att = train_attacker(w.gen, w.gen_params, w.data, ac);
    CHECK(att.final_loss < att.initial_loss);
    CHECK(att.final_loss < 0.01);

    const PrivacyReport rep =
        evaluate_epsilon_dr(make_network_fn(w.gen, w.gen_params),
                            make_network_fn(att.spec, att.params), w.data, 0.0, "fresh");
    CHECK(rep.mean_distance < 1e-3);
}

TEST_CASE("a longer attack budget recovers strictly more") {
    const ToyWorld w = make_toy_world();
    AttackConfig ac;
    ac.lr = 0.2;
    ac.batch_size = 15;
    ac.seed = 3;
    ac.attacker_spec = w.attacker;

    ac.steps = 1;
    const AttackerModel one = train_attacker(w.gen, w.gen_params, w.data, ac);
    CHECK(one.final_loss == one.initial_loss);  // single pre-update measurement

    ac.steps = 800;
    const AttackerModel many = train_attacker(w.gen, w.gen_params, w.data, ac);
    CHECK(many.final_loss < one.final_loss);
}

TEST_CASE("attack training is seed-deterministic and never touches the transform") {
    const ModelBundle bundle = build_models(8, 8, 2, 2, slim_widths(), 3);
    const ImageDataset ds = testutil::random_dataset(20, 8, 8, 2, 9);
    const ParamSet frozen = bundle.gen_params;

    AttackConfig ac;
    ac.steps = 5;
    ac.lr = 0.05;
    ac.batch_size = 8;
    ac.seed = 21;

    const AttackerModel a = train_attacker(bundle.generator, bundle.gen_params, ds, ac);
    const AttackerModel b = train_attacker(bundle.generator, bundle.gen_params, ds, ac);
    CHECK(testutil::params_equal(a.params, b.params));
    CHECK(a.final_loss == b.final_loss);
    CHECK(testutil::params_equal(frozen, bundle.gen_params));

    ac.seed = 22;
    const AttackerModel c = train_attacker(bundle.generator, bundle.gen_params, ds, ac);
    CHECK_FALSE(testutil::params_equal(a.params, c.params));
}

TEST_CASE("the default attacker mirrors the reconstructor family") {
    const ModelBundle bundle = build_models(8, 8, 2, 2, slim_widths(), 3);
    const ImageDataset ds = testutil::random_dataset(12, 8, 8, 2, 9);
    AttackConfig ac;
    ac.steps = 2;
    ac.lr = 0.05;
    ac.batch_size = 6;
    ac.attacker_widths = slim_widths();

    const AttackerModel att = train_attacker(bundle.generator, bundle.gen_params, ds, ac);
    CHECK(att.spec.input_shape == std::vector<std::size_t>{2});
    CHECK(att.spec.output_shape == std::vector<std::size_t>{1, 8, 8});
    CHECK(att.initial_loss > 0.0);
}

TEST_CASE("train_attacker validates its inputs") {
    const ToyWorld w = make_toy_world();
    AttackConfig good;
    good.steps = 2;
    good.lr = 0.1;
    good.batch_size = 4;
    good.attacker_spec = w.attacker;

    AttackConfig ac = good;
    ac.steps = 0;
    CHECK_THROWS_WITH_AS(train_attacker(w.gen, w.gen_params, w.data, ac),
                         doctest::Contains("steps must be >= 1"), std::invalid_argument);
    ac = good;
    ac.lr = 0.0;
    CHECK_THROWS_WITH_AS(train_attacker(w.gen, w.gen_params, w.data, ac),
                         doctest::Contains("lr must be positive"), std::invalid_argument);
    ac = good;
    ac.batch_size = 0;
    CHECK_THROWS_WITH_AS(train_attacker(w.gen, w.gen_params, w.data, ac),
                         doctest::Contains("batch_size must be >= 1"), std::invalid_argument);

    CHECK_THROWS_WITH_AS(train_attacker(w.gen, w.gen_params, ImageDataset{}, good),
                         doctest::Contains("empty dataset"), std::invalid_argument);

    const ImageDataset wrong_size = testutil::random_dataset(6, 4, 4, 2, 1);
    CHECK_THROWS_WITH_AS(train_attacker(w.gen, w.gen_params, wrong_size, good),
                         doctest::Contains("transform input"), std::invalid_argument);

    const NetworkSpec rank3 =
        build_network({1, 1, 2}, {LayerSpec::conv2d(1, 2, 1, 1, 1, Padding::valid)});
    CHECK_THROWS_WITH_AS(train_attacker(rank3, init_params(rank3, 1), w.data, good),
                         doctest::Contains("rank-1 codes"), std::invalid_argument);

    ac = good;
    ac.attacker_spec =
        build_network({3}, {LayerSpec::dense(3, 2), LayerSpec::reshape({1, 1, 2})});
    CHECK_THROWS_WITH_AS(train_attacker(w.gen, w.gen_params, w.data, ac),
                         doctest::Contains("attacker input width must be 2"),
                         std::invalid_argument);

    ac = good;
    ac.attacker_spec = build_network({2}, {LayerSpec::dense(2, 4)});
    CHECK_THROWS_WITH_AS(train_attacker(w.gen, w.gen_params, w.data, ac),
                         doctest::Contains("attacker output must match images"),
                         std::invalid_argument);
}

TEST_CASE("evaluate_epsilon_dr on a lossless channel reports zero distance") {
    const ImageDataset ds = testutil::random_dataset(70, 8, 8, 2, 13);  // forces chunking
    const BatchFn identity = [](const Tensor& t) { return t; };

    const PrivacyReport at_zero = evaluate_epsilon_dr(identity, identity, ds, 0.0, "in_loop");
    CHECK(at_zero.mean_distance == 0.0);
    CHECK(at_zero.satisfied);  // the bound is inclusive
    CHECK(at_zero.epsilon == 0.0);
    CHECK(at_zero.attacker_kind == "in_loop");
    CHECK(at_zero.n_test == 70);

    const PrivacyReport above = evaluate_epsilon_dr(identity, identity, ds, 1e-6);
    CHECK_FALSE(above.satisfied);
    CHECK(above.attacker_kind == "fresh");
}

TEST_CASE("evaluate_epsilon_dr validates inputs and reconstruction shapes") {
    const ImageDataset ds = testutil::random_dataset(4, 8, 8, 2, 13);
    const BatchFn identity = [](const Tensor& t) { return t; };
    CHECK_THROWS_WITH_AS(evaluate_epsilon_dr(identity, identity, ImageDataset{}, 0.1),
                         doctest::Contains("empty test set"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(evaluate_epsilon_dr(identity, identity, ds, -0.1),
                         doctest::Contains("negative epsilon"), std::invalid_argument);

    const BatchFn mangle = [](const Tensor&) { return Tensor({1, 1, 4, 4}); };
    CHECK_THROWS_WITH_AS(evaluate_epsilon_dr(identity, mangle, ds, 0.1),
                         doctest::Contains("reconstruction shape"), std::runtime_error);
}

TEST_CASE("full-rank PCA reconstructs the fit set exactly") {
    const ImageDataset ds = gaussian_cloud(40, 8, 8, 3);
    const LinearDR dr = pca_fit(ds, 64);
    CHECK(empirical_pca_distance(dr, ds) < 1e-12);
}

TEST_CASE("covariance-route PCA matches the analytic residual on its fit set") {
    const std::size_t n = 60;
    const ImageDataset ds = gaussian_cloud(n, 8, 8, 5);  // d=64: covariance route
    const LinearDR dr = pca_fit(ds, 16);
    const double expected = pca_expected_residual(dr.eigenvalues, 16, 64);
    // The spectrum uses the unbiased n-1 divisor; the empirical mean over
    // the same n samples therefore lands at (n-1)/n of the analytic value.
    const double predicted = expected * static_cast<double>(n - 1) / static_cast<double>(n);
    CHECK(empirical_pca_distance(dr, ds) ==
          doctest::Approx(predicted).epsilon(1e-9));
}

TEST_CASE("gram-route PCA matches the analytic residual on its fit set") {
    const std::size_t n = 40;
    const ImageDataset ds = gaussian_cloud(n, 24, 24, 6);  // d=576 > max(512, n): Gram route
    const LinearDR dr = pca_fit(ds, 10);
    const double expected = pca_expected_residual(dr.eigenvalues, 10, 576);
    const double predicted = expected * static_cast<double>(n - 1) / static_cast<double>(n);
    CHECK(empirical_pca_distance(dr, ds) ==
          doctest::Approx(predicted).epsilon(1e-9));
}

TEST_CASE("gram-route PCA rejects k beyond the data rank") {
    const ImageDataset ds = gaussian_cloud(5, 24, 24, 6);  // centered rank <= 4
    CHECK_THROWS_WITH_AS(pca_fit(ds, 5),
                         doctest::Contains("exceeds the positive-variance rank of the data (4)"),
                         std::invalid_argument);
}

TEST_CASE("PCA basis rows are orthonormal and the spectrum is sorted") {
    for (std::uint64_t seed : {3u, 6u}) {
        const bool gram = seed == 6;
        const ImageDataset ds =
            gram ? gaussian_cloud(40, 24, 24, seed) : gaussian_cloud(40, 8, 8, seed);
        const std::size_t d = ds.pixels();
        const LinearDR dr = pca_fit(ds, 8);
        for (std::size_t i = 0; i < dr.k; ++i)
            for (std::size_t j = i; j < dr.k; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c) dot += dr.basis.at2(i, c) * dr.basis.at2(j, c);
                CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8).scale(1.0));
            }
        REQUIRE(dr.eigenvalues.size() == d);
        for (std::size_t i = 1; i < d; ++i) {
            CHECK(dr.eigenvalues[i] <= dr.eigenvalues[i - 1] + 1e-12);
            CHECK(dr.eigenvalues[i] >= 0.0);
        }
    }
}

TEST_CASE("one component suffices for data on a line") {
    ImageDataset ds;
    ds.name = "line";
    ds.height = 8;
    ds.width = 8;
    RngStream rng(4);
    std::vector<double> dir(64);
    double norm = 0.0;
    for (double& v : dir) {
        v = rng.normal();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : dir) v /= norm;
    for (int i = 0; i < 12; ++i) {
        const double t = 0.03 * static_cast<double>(i - 6);
        std::vector<double> img(64);
        for (std::size_t j = 0; j < 64; ++j) img[j] = 0.5 + t * dir[j];
        ds.images.push_back(std::move(img));
        ds.subject_ids.push_back(0);
        ds.access_labels.push_back(0);
    }
    const LinearDR dr = pca_fit(ds, 1);
    CHECK(empirical_pca_distance(dr, ds) < 1e-10);
}

TEST_CASE("reconstruction error is non-increasing in the PCA width") {
    const ImageDataset ds = gaussian_cloud(50, 8, 8, 11);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t k : {1u, 2u, 4u, 8u, 16u, 32u, 64u}) {
        const double dist = empirical_pca_distance(pca_fit(ds, k), ds);
        CHECK(dist <= previous + 1e-15);
        previous = dist;
    }
}

TEST_CASE("pca_expected_residual evaluates the spectrum tail") {
    const std::vector<double> spectrum = {3.0, 2.0, 1.0};
    CHECK(pca_expected_residual(spectrum, 0, 3) == doctest::Approx(2.0));
    CHECK(pca_expected_residual(spectrum, 1, 3) == doctest::Approx(1.0));
    CHECK(pca_expected_residual(spectrum, 3, 3) == 0.0);
    CHECK_THROWS_WITH_AS(pca_expected_residual(spectrum, 4, 3), doctest::Contains("k > d"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(pca_expected_residual(spectrum, 1, 4),
                         doctest::Contains("spectrum length"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(pca_expected_residual({1.0, 3.0, 2.0}, 1, 3),
                         doctest::Contains("unsorted spectrum at index 1"),
                         std::invalid_argument);
}

TEST_CASE("pca_fit validates sample count and width") {
    CHECK_THROWS_WITH_AS(pca_fit(gaussian_cloud(1, 8, 8, 2), 1),
                         doctest::Contains("need at least 2 samples"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(pca_fit(gaussian_cloud(10, 8, 8, 2), 65),
                         doctest::Contains("k=65 exceeds dimension 64"), std::invalid_argument);
}

TEST_CASE("exported pairs replay the transform/reconstruct pipeline in order") {
    const ModelBundle bundle = build_models(8, 8, 2, 2, slim_widths(), 3);
    const ImageDataset ds = testutil::random_dataset(9, 8, 8, 2, 17);
    const BatchFn tf = make_network_fn(bundle.generator, bundle.gen_params);
    const BatchFn rf = make_network_fn(bundle.reconstructor, bundle.rec_params);

    CHECK(export_reconstruction_pairs(tf, rf, ds, 0).empty());

    const auto pairs = export_reconstruction_pairs(tf, rf, ds, 4);
    REQUIRE(pairs.size() == 4);
    std::vector<std::size_t> idx = {0, 1, 2, 3};
    const Tensor recon = reconstruct(bundle, transform(bundle, pack_batch(ds, idx)));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(pairs[i].original.shape() == std::vector<std::size_t>{8, 8});
        CHECK(pairs[i].reconstruction.shape() == std::vector<std::size_t>{8, 8});
        for (std::size_t p = 0; p < 64; ++p) {
            CHECK(pairs[i].original[p] == ds.images[i][p]);
            CHECK(pairs[i].reconstruction[p] == recon[i * 64 + p]);
        }
    }

    CHECK_THROWS_WITH_AS(export_reconstruction_pairs(tf, rf, ds, 10),
                         doctest::Contains("count exceeds test size"), std::invalid_argument);
}
