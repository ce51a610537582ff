#include <doctest.h>

#include <set>

#include "drpriv/config.hpp"
#include "drpriv/io.hpp"
#include "test_util.hpp"

using namespace drpriv;
using testutil::TempDir;

TEST_CASE("empty config text yields the documented defaults") {
    const RunConfig cfg = parse_run_config("");
    CHECK(cfg.data_source == "synth");
    CHECK(cfg.levels == 2);
    CHECK(cfg.test_fraction == 0.2);
    CHECK(cfg.d_prime == 7);
    CHECK(cfg.training.lr_r == 0.01);
    CHECK(cfg.training.lr_g == 0.01);
    CHECK(cfg.training.steps_r == 300);
    CHECK(cfg.training.steps_g == 300);
    CHECK(cfg.training.global_iters == 1000);
    CHECK(cfg.training.batch_size == 32);
    CHECK(cfg.training.weights.alpha == 1.0);
    CHECK(cfg.training.weights.beta == 0.2);
    CHECK(cfg.training.weights.gamma == 0.01);
    CHECK(cfg.training.weights.gamma_pen == 10.0);
    CHECK(cfg.training.weights.epsilon == 0.03);
    CHECK(cfg.training.weights.penalty_direction == PenaltyDirection::cap);
    CHECK(cfg.training.target_cov == 0.05);
    CHECK(cfg.training.update_generator_in_r_phase);
    CHECK(cfg.training.convergence_tol == 0.0);
    CHECK(cfg.out_dir == "out");
    CHECK_FALSE(cfg.emit_grids);
    CHECK(cfg.sweep_dims == std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7});
    CHECK(cfg.sweep_eps == std::vector<double>{0.005, 0.01, 0.015, 0.02});
    CHECK(cfg.effective_privacy_epsilon() == 0.03);
    CHECK(cfg.effective_attack_steps() == 300 * 1000);
}

TEST_CASE("config parser applies keys, comments and blank lines") {
    const std::string text =
        "# experiment setup\n"
        "\n"
        "dataset.source = synth\n"
        "dataset.levels = 4\n"
        "dataset.synth_subjects = 8\n"
        "model.d_prime = 3\n"
        "model.g_dense = 96\n"
        "training.lr_g = 0.005\n"
        "training.steps_g = 50\n"
        "training.penalty_direction = floor\n"
        "training.update_generator_in_r_phase = false\n"
        "privacy.epsilon = 0.02\n"
        "privacy.attack_steps = 777\n"
        "output.emit_grids = true\n"
        "sweep.dims = 2, 4, 6\n"
        "sweep.eps = 0.01,0.02\n";
    const RunConfig cfg = parse_run_config(text);
    CHECK(cfg.levels == 4);
    CHECK(cfg.synth.num_subjects == 8);
    CHECK(cfg.d_prime == 3);
    CHECK(cfg.widths.g_dense == 96);
    CHECK(cfg.training.lr_g == 0.005);
    CHECK(cfg.training.steps_g == 50);
    CHECK(cfg.training.weights.penalty_direction == PenaltyDirection::floor);
    CHECK_FALSE(cfg.training.update_generator_in_r_phase);
    CHECK(cfg.privacy_epsilon == 0.02);
    CHECK(cfg.effective_privacy_epsilon() == 0.02);
    CHECK(cfg.effective_attack_steps() == 777);
    CHECK(cfg.emit_grids);
    CHECK(cfg.sweep_dims == std::vector<std::size_t>{2, 4, 6});
    CHECK(cfg.sweep_eps == std::vector<double>{0.01, 0.02});
}

TEST_CASE("unknown keys are rejected with key name and line number") {
    const std::string text = "# comment\n\ntraining.optimzer = adam\n";
    CHECK_THROWS_WITH_AS(parse_run_config(text),
                         doctest::Contains("unknown key 'training.optimzer' at line 3"),
                         std::invalid_argument);
}

TEST_CASE("malformed lines and bad values name their line") {
    CHECK_THROWS_WITH_AS(parse_run_config("training.lr_r 0.01\n"),
                         doctest::Contains("line 1: expected 'key = value'"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_run_config("\ntraining.steps_r = many\n"),
                         doctest::Contains("key 'training.steps_r' at line 2"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_run_config("training.lr_r = -1\n"),
                         doctest::Contains("training.lr_r"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_run_config("training.penalty_direction = sideways\n"),
                         doctest::Contains("cap or floor"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("output.emit_grids = 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("dataset.test_fraction = 1.5\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("dataset.source = cloud\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("sweep.dims = 0, 2\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("sweep.eps = -0.01\n"), std::invalid_argument);
}

TEST_CASE("serialization round trips exactly") {
    RunConfig cfg = parse_run_config("");
    cfg.training.lr_g = 0.1 + 0.2;  // not representable exactly in decimal shorthand
    cfg.training.weights.epsilon = 1.0 / 3.0;
    cfg.d_prime = 5;
    cfg.sweep_eps = {0.004999999999999999, 0.01};
    cfg.data_path = "some/dir";
    cfg.synth.noise_std = 0.07;

    const std::string text = serialize_run_config(cfg);
    const RunConfig back = parse_run_config(text);
    CHECK(back.training.lr_g == cfg.training.lr_g);
    CHECK(back.training.weights.epsilon == cfg.training.weights.epsilon);
    CHECK(back.d_prime == 5);
    CHECK(back.sweep_eps == cfg.sweep_eps);
    CHECK(back.data_path == "some/dir");
    CHECK(back.synth.noise_std == 0.07);

    CHECK(serialize_run_config(back) == text);
}

TEST_CASE("load_run_config reads from disk") {
    TempDir dir;
    write_text_file_atomic(dir / "run.cfg", "model.d_prime = 2\ntraining.global_iters = 3\n");
    const RunConfig cfg = load_run_config(dir / "run.cfg");
    CHECK(cfg.d_prime == 2);
    CHECK(cfg.training.global_iters == 3);
    CHECK_THROWS_AS(load_run_config(dir / "absent.cfg"), std::runtime_error);
}

TEST_CASE("apply_override mirrors the config schema") {
    RunConfig cfg = parse_run_config("");
    apply_override(cfg, "training.lr_g=0.5");
    CHECK(cfg.training.lr_g == 0.5);
    apply_override(cfg, "sweep.dims=1,3,5");
    CHECK(cfg.sweep_dims == std::vector<std::size_t>{1, 3, 5});
    apply_override(cfg, "dataset.source=directory");
    CHECK(cfg.data_source == "directory");

    CHECK_THROWS_WITH_AS(apply_override(cfg, "training.lr_g"),
                         doctest::Contains("expected key=value"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(apply_override(cfg, "nosuch.key=1"),
                         doctest::Contains("unknown key 'nosuch.key'"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(apply_override(cfg, "training.batch_size=0"),
                         doctest::Contains("training.batch_size"), std::invalid_argument);
}

TEST_CASE("schema accessors expose every key exactly once") {
    const auto defaults = config_schema_defaults();
    std::set<std::string> keys;
    for (const auto& [key, value] : defaults) CHECK(keys.insert(key).second);

    CHECK(keys.count("training.steps_r") == 1);
    CHECK(keys.count("dataset.synth_noise_std") == 1);
    CHECK(keys.count("output.grid_count") == 1);

    bool found = false;
    for (const auto& [key, value] : defaults)
        if (key == "training.steps_r") {
            CHECK(value == "300");
            found = true;
        }
    CHECK(found);

    // d_prime plus the eleven hidden widths
    CHECK(config_keys_with_prefix("model.").size() == 12);
    CHECK(config_keys_with_prefix("training.").size() == 20);

    RunConfig cfg = parse_run_config("");
    config_set_key(cfg, "model.d_prime", "9");
    CHECK(config_get_key(cfg, "model.d_prime") == "9");
    CHECK_THROWS_AS(config_set_key(cfg, "model.unknown", "1"), std::invalid_argument);
    CHECK_THROWS_AS(config_get_key(cfg, "model.unknown"), std::invalid_argument);
}

TEST_CASE("KvLines parses and serializes the key = value form") {
    KvLines kv;
    kv.add("alpha.one", "1");
    kv.add("beta.two", "x y");
    CHECK(kv.serialize() == "alpha.one = 1\nbeta.two = x y\n");

    const KvLines parsed = KvLines::parse("# note\nalpha.one = 1\n\nbeta.two = x y\n");
    CHECK(parsed.get("alpha.one") == "1");
    CHECK(parsed.get("beta.two") == "x y");
    CHECK(parsed.find("gamma.three") == nullptr);
    CHECK_THROWS_AS(parsed.get("gamma.three"), std::out_of_range);

    CHECK_THROWS_WITH_AS(KvLines::parse("broken line\n"),
                         doctest::Contains("line 1: expected 'key = value'"),
                         std::invalid_argument);
}
