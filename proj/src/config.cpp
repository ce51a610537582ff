#include "drpriv/config.hpp"

#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "drpriv/io.hpp"

namespace drpriv {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string encode_double(double v) { return format_exact(v); }
double decode_double(const std::string& s) { return parse_double_strict(s); }
std::uint64_t decode_u64(const std::string& s) { return parse_u64_strict(s); }

bool decode_bool(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw std::invalid_argument("expected true or false, got '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    if (trim(s).empty()) return parts;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(trim(cur));
    return parts;
}

struct FieldBinding {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

using DoubleRef = std::function<double&(RunConfig&)>;
using SizeRef = std::function<std::size_t&(RunConfig&)>;

double& deref(const DoubleRef& r, const RunConfig& c) { return r(const_cast<RunConfig&>(c)); }
std::size_t& deref(const SizeRef& r, const RunConfig& c) { return r(const_cast<RunConfig&>(c)); }

FieldBinding double_field(std::string key, DoubleRef ref,
                          double min = -std::numeric_limits<double>::infinity(),
                          bool exclusive = false) {
    FieldBinding f;
    f.key = std::move(key);
    f.get = [ref](const RunConfig& c) { return encode_double(deref(ref, c)); };
    f.set = [ref, min, exclusive](RunConfig& c, const std::string& v) {
        const double x = decode_double(v);
        if (exclusive ? !(x > min) : !(x >= min))
            throw std::invalid_argument("value " + v + " must be " +
                                        (exclusive ? "> " : ">= ") + encode_double(min));
        deref(ref, c) = x;
    };
    return f;
}

FieldBinding size_field(std::string key, SizeRef ref, std::size_t min = 0) {
    FieldBinding f;
    f.key = std::move(key);
    f.get = [ref](const RunConfig& c) { return std::to_string(deref(ref, c)); };
    f.set = [ref, min](RunConfig& c, const std::string& v) {
        const std::uint64_t x = decode_u64(v);
        if (x < min)
            throw std::invalid_argument("value " + v + " must be >= " + std::to_string(min));
        deref(ref, c) = static_cast<std::size_t>(x);
    };
    return f;
}

const std::vector<FieldBinding>& schema() {
    static const std::vector<FieldBinding> fields = [] {
        std::vector<FieldBinding> s;

        s.push_back({"dataset.source",
                     [](const RunConfig& c) { return c.data_source; },
                     [](RunConfig& c, const std::string& v) {
                         if (v != "synth" && v != "directory" && v != "manifest")
                             throw std::invalid_argument(
                                 "must be one of synth, directory, manifest");
                         c.data_source = v;
                     }});
        s.push_back({"dataset.path", [](const RunConfig& c) { return c.data_path; },
                     [](RunConfig& c, const std::string& v) { c.data_path = v; }});
        s.push_back(size_field("dataset.crop_h", [](RunConfig& c) -> std::size_t& { return c.crop_h; }));
        s.push_back(size_field("dataset.crop_w", [](RunConfig& c) -> std::size_t& { return c.crop_w; }));
        s.push_back({"dataset.levels",
                     [](const RunConfig& c) { return std::to_string(c.levels); },
                     [](RunConfig& c, const std::string& v) {
                         const auto x = decode_u64(v);
                         if (x < 1) throw std::invalid_argument("must be >= 1");
                         c.levels = static_cast<int>(x);
                     }});
        s.push_back({"dataset.test_fraction",
                     [](const RunConfig& c) { return encode_double(c.test_fraction); },
                     [](RunConfig& c, const std::string& v) {
                         const double x = decode_double(v);
                         if (!(x > 0.0 && x < 1.0))
                             throw std::invalid_argument("must lie strictly between 0 and 1");
                         c.test_fraction = x;
                     }});
        s.push_back({"dataset.seed",
                     [](const RunConfig& c) { return std::to_string(c.data_seed); },
                     [](RunConfig& c, const std::string& v) { c.data_seed = decode_u64(v); }});
        s.push_back({"dataset.synth_subjects",
                     [](const RunConfig& c) { return std::to_string(c.synth.num_subjects); },
                     [](RunConfig& c, const std::string& v) {
                         const auto x = decode_u64(v);
                         if (x < 1) throw std::invalid_argument("must be >= 1");
                         c.synth.num_subjects = static_cast<int>(x);
                     }});
        s.push_back({"dataset.synth_images_per_subject",
                     [](const RunConfig& c) {
                         return std::to_string(c.synth.images_per_subject);
                     },
                     [](RunConfig& c, const std::string& v) {
                         const auto x = decode_u64(v);
                         if (x < 1) throw std::invalid_argument("must be >= 1");
                         c.synth.images_per_subject = static_cast<int>(x);
                     }});
        s.push_back(size_field("dataset.synth_h",
                               [](RunConfig& c) -> std::size_t& { return c.synth.h; }, 8));
        s.push_back(size_field("dataset.synth_w",
                               [](RunConfig& c) -> std::size_t& { return c.synth.w; }, 8));
        s.push_back(double_field("dataset.synth_noise_std",
                                 [](RunConfig& c) -> double& { return c.synth.noise_std; }, 0.0));
        s.push_back({"dataset.synth_seed",
                     [](const RunConfig& c) { return std::to_string(c.synth.seed); },
                     [](RunConfig& c, const std::string& v) { c.synth.seed = decode_u64(v); }});

        s.push_back(size_field("model.d_prime",
                               [](RunConfig& c) -> std::size_t& { return c.d_prime; }, 1));
        const std::pair<const char*, std::size_t ModelWidths::*> width_keys[] = {
            {"model.g_conv1", &ModelWidths::g_conv1}, {"model.g_conv2", &ModelWidths::g_conv2},
            {"model.g_dense", &ModelWidths::g_dense}, {"model.r_dense", &ModelWidths::r_dense},
            {"model.r_conv", &ModelWidths::r_conv},   {"model.d1", &ModelWidths::d1},
            {"model.d2", &ModelWidths::d2},           {"model.d3", &ModelWidths::d3},
            {"model.c1", &ModelWidths::c1},           {"model.c2", &ModelWidths::c2},
            {"model.c3", &ModelWidths::c3}};
        for (const auto& [key, member] : width_keys)
            s.push_back(size_field(
                key, [member](RunConfig& c) -> std::size_t& { return c.widths.*member; }, 1));

        s.push_back(double_field("training.lr_r",
                                 [](RunConfig& c) -> double& { return c.training.lr_r; }, 0.0,
                                 true));
        s.push_back(double_field("training.lr_d",
                                 [](RunConfig& c) -> double& { return c.training.lr_d; }, 0.0,
                                 true));
        s.push_back(double_field("training.lr_c",
                                 [](RunConfig& c) -> double& { return c.training.lr_c; }, 0.0,
                                 true));
        s.push_back(double_field("training.lr_g",
                                 [](RunConfig& c) -> double& { return c.training.lr_g; }, 0.0,
                                 true));
        s.push_back(size_field("training.steps_r",
                               [](RunConfig& c) -> std::size_t& { return c.training.steps_r; }));
        s.push_back(size_field("training.steps_d",
                               [](RunConfig& c) -> std::size_t& { return c.training.steps_d; }));
        s.push_back(size_field("training.steps_c",
                               [](RunConfig& c) -> std::size_t& { return c.training.steps_c; }));
        s.push_back(size_field("training.steps_g",
                               [](RunConfig& c) -> std::size_t& { return c.training.steps_g; }));
        s.push_back(size_field("training.global_iters", [](RunConfig& c) -> std::size_t& {
            return c.training.global_iters;
        }));
        s.push_back(size_field("training.batch_size",
                               [](RunConfig& c) -> std::size_t& { return c.training.batch_size; },
                               1));
        s.push_back(double_field("training.alpha",
                                 [](RunConfig& c) -> double& { return c.training.weights.alpha; },
                                 0.0));
        s.push_back(double_field("training.beta",
                                 [](RunConfig& c) -> double& { return c.training.weights.beta; },
                                 0.0));
        s.push_back(double_field("training.gamma",
                                 [](RunConfig& c) -> double& { return c.training.weights.gamma; },
                                 0.0));
        s.push_back(double_field(
            "training.gamma_pen",
            [](RunConfig& c) -> double& { return c.training.weights.gamma_pen; }, 0.0));
        s.push_back(double_field(
            "training.epsilon", [](RunConfig& c) -> double& { return c.training.weights.epsilon; },
            0.0));
        s.push_back({"training.penalty_direction",
                     [](const RunConfig& c) {
                         return std::string(c.training.weights.penalty_direction ==
                                                    PenaltyDirection::cap
                                                ? "cap"
                                                : "floor");
                     },
                     [](RunConfig& c, const std::string& v) {
                         if (v == "cap")
                             c.training.weights.penalty_direction = PenaltyDirection::cap;
                         else if (v == "floor")
                             c.training.weights.penalty_direction = PenaltyDirection::floor;
                         else
                             throw std::invalid_argument("must be cap or floor");
                     }});
        s.push_back(double_field("training.target_cov",
                                 [](RunConfig& c) -> double& { return c.training.target_cov; },
                                 0.0, true));
        s.push_back({"training.seed",
                     [](const RunConfig& c) { return std::to_string(c.training.seed); },
                     [](RunConfig& c, const std::string& v) { c.training.seed = decode_u64(v); }});
        s.push_back({"training.update_generator_in_r_phase",
                     [](const RunConfig& c) {
                         return std::string(c.training.update_generator_in_r_phase ? "true"
                                                                                   : "false");
                     },
                     [](RunConfig& c, const std::string& v) {
                         c.training.update_generator_in_r_phase = decode_bool(v);
                     }});
        s.push_back(double_field(
            "training.convergence_tol",
            [](RunConfig& c) -> double& { return c.training.convergence_tol; }, 0.0));

        s.push_back(double_field("privacy.epsilon",
                                 [](RunConfig& c) -> double& { return c.privacy_epsilon; }));
        s.push_back(size_field("privacy.attack_steps",
                               [](RunConfig& c) -> std::size_t& { return c.attack_steps; }));
        s.push_back(double_field("privacy.attack_lr",
                                 [](RunConfig& c) -> double& { return c.attack_lr; }, 0.0, true));
        s.push_back(size_field("privacy.attack_batch_size",
                               [](RunConfig& c) -> std::size_t& { return c.attack_batch_size; },
                               1));
        s.push_back({"privacy.attack_seed",
                     [](const RunConfig& c) { return std::to_string(c.attack_seed); },
                     [](RunConfig& c, const std::string& v) { c.attack_seed = decode_u64(v); }});

        s.push_back({"output.dir", [](const RunConfig& c) { return c.out_dir; },
                     [](RunConfig& c, const std::string& v) { c.out_dir = v; }});
        s.push_back({"output.emit_grids",
                     [](const RunConfig& c) {
                         return std::string(c.emit_grids ? "true" : "false");
                     },
                     [](RunConfig& c, const std::string& v) { c.emit_grids = decode_bool(v); }});
        s.push_back(size_field("output.grid_count",
                               [](RunConfig& c) -> std::size_t& { return c.grid_count; }));

        s.push_back({"sweep.dims",
                     [](const RunConfig& c) {
                         std::vector<std::string> parts;
                         for (std::size_t d : c.sweep_dims) parts.push_back(std::to_string(d));
                         return join_csv(parts);
                     },
                     [](RunConfig& c, const std::string& v) {
                         std::vector<std::size_t> dims;
                         for (const std::string& part : split_list(v)) {
                             const auto x = decode_u64(part);
                             if (x < 1) throw std::invalid_argument("dimensions must be >= 1");
                             dims.push_back(static_cast<std::size_t>(x));
                         }
                         c.sweep_dims = std::move(dims);
                     }});
        s.push_back({"sweep.eps",
                     [](const RunConfig& c) {
                         std::vector<std::string> parts;
                         for (double e : c.sweep_eps) parts.push_back(encode_double(e));
                         return join_csv(parts);
                     },
                     [](RunConfig& c, const std::string& v) {
                         std::vector<double> eps;
                         for (const std::string& part : split_list(v)) {
                             const double x = decode_double(part);
                             if (x < 0.0)
                                 throw std::invalid_argument("epsilons must be non-negative");
                             eps.push_back(x);
                         }
                         c.sweep_eps = std::move(eps);
                     }});
        return s;
    }();
    return fields;
}

const std::map<std::string, const FieldBinding*>& schema_index() {
    static const std::map<std::string, const FieldBinding*> index = [] {
        std::map<std::string, const FieldBinding*> m;
        for (const FieldBinding& f : schema()) m.emplace(f.key, &f);
        return m;
    }();
    return index;
}

std::string section_of(const std::string& key) { return key.substr(0, key.find('.')); }

}  // namespace

void KvLines::add(std::string key, std::string value) {
    entries.emplace_back(std::move(key), std::move(value));
}

const std::string* KvLines::find(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return &v;
    return nullptr;
}

const std::string& KvLines::get(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw std::out_of_range("missing key '" + key + "'");
    return *v;
}

std::string KvLines::serialize() const {
    std::string out;
    for (const auto& [k, v] : entries) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

KvLines KvLines::parse(const std::string& text) {
    KvLines kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty())
            throw std::invalid_argument("line " + std::to_string(lineno) + ": empty key");
        kv.add(key, trim(t.substr(eq + 1)));
    }
    return kv;
}

AttackConfig RunConfig::attack_config() const {
    AttackConfig ac;
    ac.steps = effective_attack_steps();
    ac.lr = attack_lr;
    ac.batch_size = attack_batch_size;
    ac.seed = attack_seed;
    ac.attacker_widths = widths;
    return ac;
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    const auto& index = schema_index();
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const auto it = index.find(key);
        if (it == index.end())
            throw std::invalid_argument("config: unknown key '" + key + "' at line " +
                                        std::to_string(lineno));
        try {
            it->second->set(cfg, value);
        } catch (const std::exception& e) {
            throw std::invalid_argument("config: key '" + key + "' at line " +
                                        std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_text_file(path));
}

std::string serialize_run_config(const RunConfig& cfg) {
    std::string out;
    std::string section;
    for (const FieldBinding& f : schema()) {
        const std::string sec = section_of(f.key);
        if (sec != section) {
            if (!section.empty()) out += "\n";
            section = sec;
        }
        out += f.key;
        out += " = ";
        out += f.get(cfg);
        out += "\n";
    }
    return out;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override '" + assignment + "': expected key=value");
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    const auto it = schema_index().find(key);
    if (it == schema_index().end())
        throw std::invalid_argument("override: unknown key '" + key + "'");
    try {
        it->second->set(cfg, value);
    } catch (const std::exception& e) {
        throw std::invalid_argument("override: key '" + key + "': " + e.what());
    }
}

std::vector<std::pair<std::string, std::string>> config_schema_defaults() {
    RunConfig defaults;
    std::vector<std::pair<std::string, std::string>> out;
    for (const FieldBinding& f : schema()) out.emplace_back(f.key, f.get(defaults));
    return out;
}

void config_set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto it = schema_index().find(key);
    if (it == schema_index().end())
        throw std::invalid_argument("config: unknown key '" + key + "'");
    try {
        it->second->set(cfg, value);
    } catch (const std::exception& e) {
        throw std::invalid_argument("config: key '" + key + "': " + e.what());
    }
}

std::string config_get_key(const RunConfig& cfg, const std::string& key) {
    const auto it = schema_index().find(key);
    if (it == schema_index().end())
        throw std::invalid_argument("config: unknown key '" + key + "'");
    return it->second->get(cfg);
}

std::vector<std::string> config_keys_with_prefix(const std::string& prefix) {
    std::vector<std::string> keys;
    for (const FieldBinding& f : schema())
        if (f.key.rfind(prefix, 0) == 0) keys.push_back(f.key);
    return keys;
}

}  // namespace drpriv
