"""Smoke tests for the drpriv Python bindings.

Runs under pytest or directly: python3 test_smoke.py
"""

import os
import tempfile

import drpriv

TINY_CONFIG = """
dataset.source = synth
dataset.levels = 2
dataset.test_fraction = 0.25
dataset.seed = 3
dataset.synth_subjects = 2
dataset.synth_images_per_subject = 8
dataset.synth_h = 8
dataset.synth_w = 8
dataset.synth_noise_std = 0.05
dataset.synth_seed = 3
model.d_prime = 2
model.g_conv1 = 2
model.g_conv2 = 3
model.g_dense = 12
model.r_dense = 12
model.r_conv = 2
model.d1 = 10
model.d2 = 8
model.d3 = 6
model.c1 = 8
model.c2 = 6
model.c3 = 4
training.steps_r = 2
training.steps_d = 2
training.steps_c = 2
training.steps_g = 2
training.global_iters = 2
training.batch_size = 4
privacy.attack_steps = 4
privacy.attack_batch_size = 4
"""


def test_default_config():
    text = drpriv.default_config()
    assert "training.steps_r = 300" in text
    assert "model.d_prime = 7" in text
    assert "dataset.source = synth" in text


def test_canonicalize_is_idempotent():
    canon = drpriv.canonicalize_config(TINY_CONFIG)
    assert drpriv.canonicalize_config(canon) == canon
    default = drpriv.default_config()
    assert drpriv.canonicalize_config(default) == default


def test_train_and_inspect():
    with tempfile.TemporaryDirectory() as out:
        paths = drpriv.run("train", TINY_CONFIG, out_dir=out)
        names = sorted(os.path.basename(p) for p in paths)
        assert names == ["checkpoint.bin", "history.csv"]
        for p in paths:
            assert os.path.exists(p)

        ckpt = next(p for p in paths if p.endswith("checkpoint.bin"))
        info = drpriv.checkpoint_info(ckpt)
        assert info["format_version"] == 1
        assert info["d_prime"] == 2
        assert info["image_h"] == 8 and info["image_w"] == 8
        assert info["num_levels"] == 2
        assert info["iterations"] == 2
        assert info["num_params"] > 0
        final = info["final_record"]
        for key in ("l_r", "l_d", "l_c", "l_g", "mean_distance", "max_param_delta"):
            assert key in final

        history = next(p for p in paths if p.endswith("history.csv"))
        with open(history) as fh:
            lines = fh.read().strip().splitlines()
        assert lines[0].startswith("iteration,")
        assert len(lines) == 3  # header + two iterations

        evaluated = drpriv.run("evaluate", TINY_CONFIG, out_dir=out)
        names = sorted(os.path.basename(p) for p in evaluated)
        assert names == ["privacy.csv", "summary.txt", "utility.csv"]


def test_seed_and_overrides():
    with tempfile.TemporaryDirectory() as top:
        a = drpriv.run("train", TINY_CONFIG, out_dir=os.path.join(top, "a"), seed=9)
        b = drpriv.run(
            "train",
            TINY_CONFIG,
            out_dir=os.path.join(top, "b"),
            overrides=["training.global_iters=1"],
            seed=9,
        )
        hist_a = next(p for p in a if p.endswith("history.csv"))
        hist_b = next(p for p in b if p.endswith("history.csv"))
        with open(hist_a) as fh:
            rows_a = fh.read().strip().splitlines()
        with open(hist_b) as fh:
            rows_b = fh.read().strip().splitlines()
        assert len(rows_a) == 3 and len(rows_b) == 2
        assert rows_a[1] == rows_b[1]  # same seed, same first iteration


def test_evaluate_without_checkpoint_raises():
    with tempfile.TemporaryDirectory() as out:
        try:
            drpriv.run("evaluate", TINY_CONFIG, out_dir=out)
        except RuntimeError as err:
            assert "checkpoint" in str(err)
        else:
            raise AssertionError("evaluate without a checkpoint should raise")


def main():
    tests = [
        test_default_config,
        test_canonicalize_is_idempotent,
        test_train_and_inspect,
        test_seed_and_overrides,
        test_evaluate_without_checkpoint_raises,
    ]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    main()
