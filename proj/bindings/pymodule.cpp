#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "drpriv/commands.hpp"
#include "drpriv/config.hpp"
#include "drpriv/trainer.hpp"

namespace py = pybind11;

namespace {

std::string default_config() { return drpriv::serialize_run_config(drpriv::RunConfig{}); }

std::string canonicalize_config(const std::string& text) {
    return drpriv::serialize_run_config(drpriv::parse_run_config(text));
}

std::vector<std::string> run(const std::string& command, const std::string& config_text,
                             const std::string& out_dir,
                             const std::vector<std::string>& overrides,
                             std::optional<std::uint64_t> seed) {
    drpriv::RunConfig cfg = drpriv::parse_run_config(config_text);
    for (const std::string& assignment : overrides) drpriv::apply_override(cfg, assignment);
    if (seed) {
        cfg.training.seed = *seed;
        cfg.data_seed = *seed;
        cfg.synth.seed = *seed;
        cfg.attack_seed = *seed;
    }
    const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
    std::vector<std::string> written;
    for (const auto& path : drpriv::run_command(command, cfg, dir))
        written.push_back(path.string());
    return written;
}

py::dict checkpoint_info(const std::string& path) {
    const drpriv::Checkpoint ckpt = drpriv::load_checkpoint(path);
    py::dict info;
    info["format_version"] = ckpt.format_version;
    info["config_hash"] = ckpt.bundle.config_hash;
    info["d_prime"] = ckpt.bundle.d_prime;
    info["image_h"] = ckpt.bundle.image_h;
    info["image_w"] = ckpt.bundle.image_w;
    info["num_levels"] = ckpt.bundle.num_levels;
    info["iterations"] = ckpt.history.size();
    info["num_params"] =
        ckpt.bundle.gen_params.total_size() + ckpt.bundle.rec_params.total_size() +
        ckpt.bundle.disc_params.total_size() + ckpt.bundle.cls_params.total_size();
    if (!ckpt.history.empty()) {
        const drpriv::IterationRecord& last = ckpt.history.back();
        py::dict rec;
        rec["l_r"] = last.l_r;
        rec["l_d"] = last.l_d;
        rec["l_c"] = last.l_c;
        rec["l_g"] = last.l_g;
        rec["mean_distance"] = last.mean_distance;
        rec["max_param_delta"] = last.max_param_delta;
        info["final_record"] = rec;
    }
    return info;
}

}  // namespace

PYBIND11_MODULE(_drpriv, m) {
    m.doc() = "Privacy-preserving dimension reduction (AutoGAN-DRP) core bindings";

    m.def("default_config", &default_config,
          "Serialized configuration with every key at its default value.");
    m.def("canonicalize_config", &canonicalize_config, py::arg("text"),
          "Parse a configuration and re-serialize it in canonical form.");
    m.def("run", &run, py::arg("command"), py::arg("config_text"), py::arg("out_dir") = "",
          py::arg("overrides") = std::vector<std::string>{},
          py::arg("seed") = std::nullopt,
          "Run one command (train, evaluate, attack, sweep-dims, sweep-eps, report) "
          "and return the artifact paths written.");
    m.def("checkpoint_info", &checkpoint_info, py::arg("path"),
          "Summary of a checkpoint.bin: geometry, parameter count, history tail.");
}
