#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "drpriv/dataset.hpp"
#include "drpriv/models.hpp"
#include "drpriv/privacy.hpp"
#include "drpriv/trainer.hpp"

namespace drpriv {

// Ordered key/value lines in the canonical "key = value" structured-text
// form ('#' comment lines and blanks ignored on parse).
struct KvLines {
    std::vector<std::pair<std::string, std::string>> entries;

    void add(std::string key, std::string value);
    const std::string* find(const std::string& key) const;
    const std::string& get(const std::string& key) const;  // throws if missing
    std::string serialize() const;
    static KvLines parse(const std::string& text);  // names the line on malformed input
};

// Full experiment configuration. Every field maps to one flat
// `section.key` in the structured-text schema.
struct RunConfig {
    // dataset block
    std::string data_source = "synth";  // synth | directory | manifest
    std::string data_path;
    std::size_t crop_h = 0;  // 0 = no crop
    std::size_t crop_w = 0;
    int levels = 2;  // m
    double test_fraction = 0.2;
    std::uint64_t data_seed = 1;
    SynthSpec synth{4, 50, 16, 16, 0.1, 1};

    // model block
    std::size_t d_prime = 7;
    ModelWidths widths;

    // training block
    TrainingConfig training;

    // privacy block
    double privacy_epsilon = -1.0;  // negative = inherit training.epsilon
    std::size_t attack_steps = 0;   // 0 = auto: steps_r * global_iters
    double attack_lr = 0.01;
    std::size_t attack_batch_size = 32;
    std::uint64_t attack_seed = 1;

    // output block
    std::string out_dir = "out";
    bool emit_grids = false;
    std::size_t grid_count = 8;

    // sweep block
    std::vector<std::size_t> sweep_dims = {1, 2, 3, 4, 5, 6, 7};
    std::vector<double> sweep_eps = {0.005, 0.01, 0.015, 0.02};

    // The epsilon the privacy verdict is judged against.
    double effective_privacy_epsilon() const {
        return privacy_epsilon < 0.0 ? training.weights.epsilon : privacy_epsilon;
    }
    // The fresh-attacker budget (equal-compute convention by default).
    std::size_t effective_attack_steps() const {
        return attack_steps > 0 ? attack_steps : training.steps_r * training.global_iters;
    }
    AttackConfig attack_config() const;
};

// Parses the documented schema; unknown keys, type errors and constraint
// violations are reported with the key name and line number.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical serialization; parse(serialize(cfg)) reproduces cfg exactly
// (doubles printed in shortest round-trip form).
std::string serialize_run_config(const RunConfig& cfg);

// Applies one `section.key=value` override (the CLI --set path).
void apply_override(RunConfig& cfg, const std::string& assignment);

// All keys in schema order, with the serialized default values.
std::vector<std::pair<std::string, std::string>> config_schema_defaults();

// Single-key schema access (shared by overrides and the checkpoint codec).
void config_set_key(RunConfig& cfg, const std::string& key, const std::string& value);
std::string config_get_key(const RunConfig& cfg, const std::string& key);
std::vector<std::string> config_keys_with_prefix(const std::string& prefix);

}  // namespace drpriv
