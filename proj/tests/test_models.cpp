#include <doctest.h>

#include <cmath>

#include "drpriv/models.hpp"
#include "drpriv/rng.hpp"
#include "test_util.hpp"

using namespace drpriv;

namespace {

Tensor random_images(std::size_t b, std::size_t h, std::size_t w, std::uint64_t seed) {
    Tensor t({b, 1, h, w});
    RngStream rng(seed);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform();
    return t;
}

}  // namespace

TEST_CASE("build_models wires four networks around the code width") {
    const ModelBundle b = build_models(16, 16, 3, 2, 42);

    CHECK(b.generator.input_shape == std::vector<std::size_t>{1, 16, 16});
    CHECK(b.generator.output_shape == std::vector<std::size_t>{3});
    CHECK(b.reconstructor.input_shape == std::vector<std::size_t>{3});
    CHECK(b.reconstructor.output_shape == std::vector<std::size_t>{1, 16, 16});
    CHECK(b.discriminator.input_shape == std::vector<std::size_t>{1, 16, 16});
    CHECK(b.discriminator.output_shape == std::vector<std::size_t>{1});
    CHECK(b.classifier.input_shape == std::vector<std::size_t>{3});
    CHECK(b.classifier.output_shape == std::vector<std::size_t>{2});

    CHECK(b.d_prime == 3);
    CHECK(b.image_h == 16);
    CHECK(b.image_w == 16);
    CHECK(b.num_levels == 2);
    CHECK(b.init_seed == 42);
}

TEST_CASE("codes live in [-1,1] and reconstructions in (0,1)") {
    const ModelBundle b = build_models(16, 16, 4, 2, 7);
    const Tensor x = random_images(6, 16, 16, 3);

    const Tensor codes = transform(b, x);
    CHECK(codes.shape() == std::vector<std::size_t>{6, 4});
    for (std::size_t i = 0; i < codes.size(); ++i) {
        CHECK(codes[i] >= -1.0);
        CHECK(codes[i] <= 1.0);
    }

    const Tensor recon = reconstruct(b, codes);
    CHECK(recon.shape() == std::vector<std::size_t>{6, 1, 16, 16});
    for (std::size_t i = 0; i < recon.size(); ++i) {
        CHECK(recon[i] > 0.0);
        CHECK(recon[i] < 1.0);
    }
}

TEST_CASE("transform and reconstruct equal direct network forwards") {
    const ModelBundle b = build_models(16, 16, 2, 3, 11);
    const Tensor x = random_images(3, 16, 16, 5);

    const Tensor codes = transform(b, x);
    CHECK(testutil::tensors_equal(codes, forward(b.generator, b.gen_params, x)));
    const Tensor recon = reconstruct(b, codes);
    CHECK(testutil::tensors_equal(recon, forward(b.reconstructor, b.rec_params, codes)));

    // classifier emits per-class probabilities
    const Tensor probs = forward(b.classifier, b.cls_params, codes);
    CHECK(probs.shape() == std::vector<std::size_t>{3, 3});
    for (std::size_t n = 0; n < 3; ++n) {
        double row = 0.0;
        for (std::size_t k = 0; k < 3; ++k) row += probs.at2(n, k);
        CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }

    // discriminator emits one probability per image
    const Tensor verdicts = forward(b.discriminator, b.disc_params, x);
    CHECK(verdicts.shape() == std::vector<std::size_t>{3, 1});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(verdicts[i] > 0.0);
        CHECK(verdicts[i] < 1.0);
    }
}

TEST_CASE("single-class classifier is the constant distribution") {
    const ModelBundle b = build_models(16, 16, 1, 1, 9);
    const Tensor codes = transform(b, random_images(4, 16, 16, 2));
    const Tensor probs = forward(b.classifier, b.cls_params, codes);
    CHECK(probs.shape() == std::vector<std::size_t>{4, 1});
    for (std::size_t i = 0; i < 4; ++i) CHECK(probs[i] == 1.0);
}

TEST_CASE("compression ratio is pixels over code width") {
    CHECK(compression_ratio(build_models(16, 16, 4, 2, 1)) == 64.0);
    const ModelBundle b = build_models(92, 92, 7, 2, 1);
    CHECK(compression_ratio(b) == doctest::Approx(8464.0 / 7.0));
}

TEST_CASE("larger images compose through the same architecture") {
    const ModelBundle b = build_models(168, 168, 5, 4, 21);
    const Tensor x = random_images(2, 168, 168, 6);
    const Tensor recon = reconstruct(b, transform(b, x));
    CHECK(recon.shape() == std::vector<std::size_t>{2, 1, 168, 168});
    for (std::size_t i = 0; i < recon.size(); ++i) {
        CHECK(recon[i] > 0.0);
        CHECK(recon[i] < 1.0);
    }
}

TEST_CASE("width overrides change the hidden geometry") {
    ModelWidths slim;
    slim.g_conv1 = 2;
    slim.g_conv2 = 3;
    slim.g_dense = 10;
    slim.r_dense = 12;
    slim.r_conv = 2;
    slim.d1 = 8;
    slim.d2 = 6;
    slim.d3 = 4;
    slim.c1 = 6;
    slim.c2 = 5;
    slim.c3 = 4;
    const ModelBundle b = build_models(8, 8, 2, 2, slim, 3);
    CHECK(b.generator.num_params() <
          build_models(8, 8, 2, 2, 3).generator.num_params());
    // stage-2 conv emits g_conv2 channels at quarter resolution
    CHECK(b.generator.shapes[3] == std::vector<std::size_t>{3, 2, 2});
    CHECK(b.reconstructor.shapes[5] == std::vector<std::size_t>{3, 2, 2});
}

TEST_CASE("initialization is seeded per network") {
    const ModelBundle a = build_models(16, 16, 3, 2, 100);
    const ModelBundle b = build_models(16, 16, 3, 2, 100);
    CHECK(testutil::params_equal(a.gen_params, b.gen_params));
    CHECK(testutil::params_equal(a.rec_params, b.rec_params));
    CHECK(testutil::params_equal(a.disc_params, b.disc_params));
    CHECK(testutil::params_equal(a.cls_params, b.cls_params));

    const ModelBundle c = build_models(16, 16, 3, 2, 101);
    CHECK_FALSE(testutil::params_equal(a.gen_params, c.gen_params));
}

TEST_CASE("config hash is a stable 16-hex digest sensitive to every knob") {
    const ModelBundle a = build_models(16, 16, 3, 2, 1);
    CHECK(a.config_hash.size() == 16);
    CHECK(a.config_hash.find_first_not_of("0123456789abcdef") == std::string::npos);

    CHECK(a.config_hash == build_models(16, 16, 3, 2, 1).config_hash);
    CHECK(a.config_hash != build_models(16, 16, 4, 2, 1).config_hash);
    CHECK(a.config_hash != build_models(16, 16, 3, 3, 1).config_hash);
    CHECK(a.config_hash != build_models(16, 16, 3, 2, 2).config_hash);
    CHECK(a.config_hash != build_models(16, 20, 3, 2, 1).config_hash);

    ModelWidths wide;
    wide.c3 = 48;
    CHECK(a.config_hash != build_models(16, 16, 3, 2, wide, 1).config_hash);
}

TEST_CASE("build_models rejects incompatible geometry") {
    CHECK_THROWS_WITH_AS(build_models(10, 16, 3, 2, 1),
                         doctest::Contains("invalid shape composition"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(build_models(16, 18, 3, 2, 1),
                         doctest::Contains("invalid shape composition"), std::invalid_argument);
    CHECK_THROWS_AS(build_models(4, 4, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_models(16, 16, 0, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_models(16, 16, 3, 0, 1), std::invalid_argument);
    CHECK_THROWS_WITH_AS(reconstructor_spec(10, 16, 3, ModelWidths{}),
                         doctest::Contains("invalid shape composition"), std::invalid_argument);
}
