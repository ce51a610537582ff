#include "drpriv/commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace drpriv {

namespace {

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir) {
    return out_dir / "checkpoint.bin";
}

Checkpoint require_checkpoint(const std::filesystem::path& out_dir) {
    const std::filesystem::path path = checkpoint_path(out_dir);
    if (!std::filesystem::exists(path))
        throw std::runtime_error("no checkpoint at " + path.string() +
                                 " (run the train command first)");
    return load_checkpoint(path);
}

void ensure_out_dir(const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec && !std::filesystem::is_directory(out_dir))
        throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " +
                                 ec.message());
}

void require_header(const std::string& csv, const std::string& expected, const char* what,
                    std::vector<std::string>* rows) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(std::string(what) + ": empty document");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected)
        throw std::runtime_error(std::string(what) + ": unexpected header '" + line + "'");
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rows->push_back(line);
    }
}

PrivacyReport in_loop_privacy(const ModelBundle& bundle, const ImageDataset& test,
                              double epsilon) {
    return evaluate_epsilon_dr(make_network_fn(bundle.generator, bundle.gen_params),
                               make_network_fn(bundle.reconstructor, bundle.rec_params), test,
                               epsilon, "in_loop");
}

KvLines summary_lines(const RunConfig& cfg, const Checkpoint& ckpt, const UtilityReport& ur,
                      const PrivacyReport& pr) {
    KvLines kv;
    kv.add("run.config_hash", ckpt.bundle.config_hash);
    kv.add("run.d_prime", std::to_string(ckpt.bundle.d_prime));
    kv.add("run.image_h", std::to_string(ckpt.bundle.image_h));
    kv.add("run.image_w", std::to_string(ckpt.bundle.image_w));
    kv.add("run.num_levels", std::to_string(ckpt.bundle.num_levels));
    kv.add("run.compression_ratio", format_g9(compression_ratio(ckpt.bundle)));
    kv.add("run.global_iterations_run", std::to_string(ckpt.history.size()));
    if (!ckpt.history.empty()) {
        const IterationRecord& last = ckpt.history.back();
        kv.add("train.final_l_r", format_g9(last.l_r));
        kv.add("train.final_l_d", format_g9(last.l_d));
        kv.add("train.final_l_c", format_g9(last.l_c));
        kv.add("train.final_l_g", format_g9(last.l_g));
        kv.add("train.final_mean_distance", format_g9(last.mean_distance));
    }
    kv.add("utility.accuracy", format_g9(ur.accuracy));
    kv.add("utility.n_test", std::to_string(ur.n_test));
    kv.add("privacy.attacker_kind", pr.attacker_kind);
    kv.add("privacy.mean_distance", format_g9(pr.mean_distance));
    kv.add("privacy.epsilon", format_g9(pr.epsilon));
    kv.add("privacy.satisfied", pr.satisfied ? "true" : "false");
    kv.add("privacy.n_test", std::to_string(pr.n_test));
    kv.add("config.penalty_direction",
           cfg.training.weights.penalty_direction == PenaltyDirection::cap ? "cap" : "floor");
    return kv;
}

}  // namespace

SplitPair prepare_data(const RunConfig& cfg) {
    ImageDataset ds;
    if (cfg.data_source == "synth") {
        ds = synth_dataset(cfg.synth);
    } else if (cfg.data_source == "directory") {
        if (cfg.data_path.empty())
            throw std::invalid_argument("dataset.source = directory requires dataset.path");
        ds = load_image_directory(cfg.data_path);
    } else if (cfg.data_source == "manifest") {
        if (cfg.data_path.empty())
            throw std::invalid_argument("dataset.source = manifest requires dataset.path");
        ds = load_manifest(cfg.data_path);
    } else {
        throw std::invalid_argument("unknown dataset.source '" + cfg.data_source + "'");
    }
    if (cfg.crop_h > 0 || cfg.crop_w > 0) {
        const std::size_t ch = cfg.crop_h > 0 ? cfg.crop_h : ds.height;
        const std::size_t cw = cfg.crop_w > 0 ? cfg.crop_w : ds.width;
        ds = preprocess(ds, ch, cw);
    }
    ds = assign_access_levels(ds, cfg.levels, cfg.data_seed);
    return split_train_test(ds, cfg.test_fraction, cfg.data_seed);
}

std::string history_to_csv(const TrainingHistory& history) {
    std::string out = "iteration,l_r,l_d,l_c,l_g,mean_distance,max_param_delta\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        const IterationRecord& rec = history[i];
        out += join_csv({std::to_string(i + 1), format_g9(rec.l_r), format_g9(rec.l_d),
                         format_g9(rec.l_c), format_g9(rec.l_g), format_g9(rec.mean_distance),
                         format_g9(rec.max_param_delta)});
        out += "\n";
    }
    return out;
}

TrainingHistory history_from_csv(const std::string& csv) {
    std::vector<std::string> rows;
    require_header(csv, "iteration,l_r,l_d,l_c,l_g,mean_distance,max_param_delta",
                   "history_from_csv", &rows);
    TrainingHistory history;
    history.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::vector<std::string> f = split_csv_line(rows[i]);
        if (f.size() != 7)
            throw std::runtime_error("history_from_csv: row " + std::to_string(i + 1) + " has " +
                                     std::to_string(f.size()) + " fields (expected 7)");
        if (parse_u64_strict(f[0]) != i + 1)
            throw std::runtime_error("history_from_csv: row " + std::to_string(i + 1) +
                                     " has iteration index " + f[0]);
        IterationRecord rec;
        rec.l_r = parse_double_strict(f[1]);
        rec.l_d = parse_double_strict(f[2]);
        rec.l_c = parse_double_strict(f[3]);
        rec.l_g = parse_double_strict(f[4]);
        rec.mean_distance = parse_double_strict(f[5]);
        rec.max_param_delta = parse_double_strict(f[6]);
        history.push_back(rec);
    }
    return history;
}

std::string utility_to_csv(const UtilityReport& report) {
    std::string out = "accuracy,num_levels,d_prime,compression_ratio,n_test\n";
    out += join_csv({format_g9(report.accuracy), std::to_string(report.num_levels),
                     std::to_string(report.d_prime), format_g9(report.compression_ratio),
                     std::to_string(report.n_test)});
    out += "\n";
    return out;
}

UtilityReport utility_from_csv(const std::string& csv) {
    std::vector<std::string> rows;
    require_header(csv, "accuracy,num_levels,d_prime,compression_ratio,n_test",
                   "utility_from_csv", &rows);
    if (rows.size() != 1)
        throw std::runtime_error("utility_from_csv: expected exactly one data row, got " +
                                 std::to_string(rows.size()));
    const std::vector<std::string> f = split_csv_line(rows[0]);
    if (f.size() != 5)
        throw std::runtime_error("utility_from_csv: row has " + std::to_string(f.size()) +
                                 " fields (expected 5)");
    UtilityReport r;
    r.accuracy = parse_double_strict(f[0]);
    r.num_levels = static_cast<int>(parse_u64_strict(f[1]));
    r.d_prime = static_cast<std::size_t>(parse_u64_strict(f[2]));
    r.compression_ratio = parse_double_strict(f[3]);
    r.n_test = static_cast<std::size_t>(parse_u64_strict(f[4]));
    return r;
}

std::string privacy_to_csv(const std::vector<PrivacyReport>& rows) {
    std::string out = "attacker_kind,mean_distance,epsilon,satisfied,n_test\n";
    for (const PrivacyReport& r : rows) {
        out += join_csv({r.attacker_kind, format_g9(r.mean_distance), format_g9(r.epsilon),
                         r.satisfied ? "true" : "false", std::to_string(r.n_test)});
        out += "\n";
    }
    return out;
}

std::vector<PrivacyReport> privacy_from_csv(const std::string& csv) {
    std::vector<std::string> rows;
    require_header(csv, "attacker_kind,mean_distance,epsilon,satisfied,n_test",
                   "privacy_from_csv", &rows);
    std::vector<PrivacyReport> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::vector<std::string> f = split_csv_line(rows[i]);
        if (f.size() != 5)
            throw std::runtime_error("privacy_from_csv: row " + std::to_string(i + 1) + " has " +
                                     std::to_string(f.size()) + " fields (expected 5)");
        PrivacyReport r;
        r.attacker_kind = f[0];
        r.mean_distance = parse_double_strict(f[1]);
        r.epsilon = parse_double_strict(f[2]);
        if (f[3] == "true")
            r.satisfied = true;
        else if (f[3] == "false")
            r.satisfied = false;
        else
            throw std::runtime_error("privacy_from_csv: row " + std::to_string(i + 1) +
                                     ": bad satisfied value '" + f[3] + "'");
        r.n_test = static_cast<std::size_t>(parse_u64_strict(f[4]));
        out.push_back(r);
    }
    return out;
}

GrayImage render_grid(const std::vector<ReconstructionPair>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("render_grid: no pairs");
    const std::size_t h = pairs[0].original.dim(0);
    const std::size_t w = pairs[0].original.dim(1);
    for (const ReconstructionPair& p : pairs) {
        if (p.original.rank() != 2 || p.reconstruction.rank() != 2 || p.original.dim(0) != h ||
            p.original.dim(1) != w || p.reconstruction.dim(0) != h || p.reconstruction.dim(1) != w)
            throw std::invalid_argument("render_grid: pair shapes are not uniform");
    }
    GrayImage img;
    img.height = 2 * h;
    img.width = pairs.size() * w;
    img.pixels.assign(img.height * img.width, 0);
    const auto quantize = [](double v) {
        const double q = std::round(v * 255.0);
        return static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
    };
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                img.pixels[i * img.width + p * w + j] = quantize(pairs[p].original.at2(i, j));
                img.pixels[(h + i) * img.width + p * w + j] =
                    quantize(pairs[p].reconstruction.at2(i, j));
            }
        }
    }
    return img;
}

void export_grid(const std::vector<ReconstructionPair>& pairs,
                 const std::filesystem::path& path) {
    write_pgm(path, render_grid(pairs));
}

std::vector<std::filesystem::path> cmd_train(const RunConfig& cfg,
                                             const std::filesystem::path& out_dir) {
    ensure_out_dir(out_dir);
    const SplitPair data = prepare_data(cfg);

    TrainerState st = init_trainer(data.train, cfg.training, cfg.d_prime, cfg.levels, cfg.widths);
    advance(st, data.train, cfg.training.global_iters);

    const std::filesystem::path ckpt_path = checkpoint_path(out_dir);
    save_checkpoint(make_checkpoint(st), ckpt_path);
    const std::filesystem::path hist_path = out_dir / "history.csv";
    write_text_file_atomic(hist_path, history_to_csv(st.history));
    return {ckpt_path, hist_path};
}

std::vector<std::filesystem::path> cmd_evaluate(const RunConfig& cfg,
                                                const std::filesystem::path& out_dir) {
    ensure_out_dir(out_dir);
    const Checkpoint ckpt = require_checkpoint(out_dir);
    const SplitPair data = prepare_data(cfg);

    const UtilityReport ur = accuracy(ckpt.bundle, data.test);
    const PrivacyReport pr =
        in_loop_privacy(ckpt.bundle, data.test, cfg.effective_privacy_epsilon());

    const std::filesystem::path upath = out_dir / "utility.csv";
    const std::filesystem::path ppath = out_dir / "privacy.csv";
    const std::filesystem::path spath = out_dir / "summary.txt";
    write_text_file_atomic(upath, utility_to_csv(ur));
    write_text_file_atomic(ppath, privacy_to_csv({pr}));
    write_text_file_atomic(spath, summary_lines(cfg, ckpt, ur, pr).serialize());
    return {upath, ppath, spath};
}

std::vector<std::filesystem::path> cmd_attack(const RunConfig& cfg,
                                              const std::filesystem::path& out_dir) {
    ensure_out_dir(out_dir);
    const Checkpoint ckpt = require_checkpoint(out_dir);
    const SplitPair data = prepare_data(cfg);
    const double eps = cfg.effective_privacy_epsilon();

    const PrivacyReport in_loop = in_loop_privacy(ckpt.bundle, data.test, eps);

    const AttackerModel attacker =
        train_attacker(ckpt.bundle.generator, ckpt.bundle.gen_params, data.train,
                       cfg.attack_config());
    const PrivacyReport fresh = evaluate_epsilon_dr(
        make_network_fn(ckpt.bundle.generator, ckpt.bundle.gen_params),
        make_network_fn(attacker.spec, attacker.params), data.test, eps, "fresh");

    // Headline verdict: the strongest attacker observed wins.
    PrivacyReport headline = fresh.mean_distance <= in_loop.mean_distance ? fresh : in_loop;
    headline.attacker_kind = "min";

    const std::filesystem::path ppath = out_dir / "privacy.csv";
    write_text_file_atomic(ppath, privacy_to_csv({in_loop, fresh, headline}));
    return {ppath};
}

std::vector<std::filesystem::path> cmd_sweep_dims(const RunConfig& cfg,
                                                  const std::filesystem::path& out_dir) {
    ensure_out_dir(out_dir);
    const SplitPair data = prepare_data(cfg);
    const SweepTable table =
        dimension_sweep(data.train, data.test, cfg.training, cfg.sweep_dims, cfg.levels,
                        cfg.widths);
    const std::filesystem::path path = out_dir / "sweep.csv";
    write_sweep_csv(table, path);
    return {path};
}

std::vector<std::filesystem::path> cmd_sweep_eps(const RunConfig& cfg,
                                                 const std::filesystem::path& out_dir) {
    ensure_out_dir(out_dir);
    const SplitPair data = prepare_data(cfg);
    const SweepTable table = epsilon_sweep(data.train, data.test, cfg.training, cfg.sweep_eps,
                                           cfg.d_prime, cfg.levels, cfg.widths);
    const std::filesystem::path path = out_dir / "sweep.csv";
    write_sweep_csv(table, path);
    return {path};
}

std::vector<std::filesystem::path> cmd_report(const RunConfig& cfg,
                                              const std::filesystem::path& out_dir) {
    ensure_out_dir(out_dir);
    const Checkpoint ckpt = require_checkpoint(out_dir);
    const SplitPair data = prepare_data(cfg);

    const UtilityReport ur = accuracy(ckpt.bundle, data.test);
    const PrivacyReport pr =
        in_loop_privacy(ckpt.bundle, data.test, cfg.effective_privacy_epsilon());

    std::vector<std::filesystem::path> written;
    const std::filesystem::path spath = out_dir / "summary.txt";
    write_text_file_atomic(spath, summary_lines(cfg, ckpt, ur, pr).serialize());
    written.push_back(spath);

    if (cfg.emit_grids) {
        const std::size_t count = std::min(cfg.grid_count, data.test.size());
        if (count > 0) {
            const auto pairs = export_reconstruction_pairs(
                make_network_fn(ckpt.bundle.generator, ckpt.bundle.gen_params),
                make_network_fn(ckpt.bundle.reconstructor, ckpt.bundle.rec_params), data.test,
                count);
            const std::filesystem::path gpath = out_dir / "grid.pgm";
            export_grid(pairs, gpath);
            written.push_back(gpath);
        }
    }
    return written;
}

std::vector<std::filesystem::path> run_command(const std::string& name, const RunConfig& cfg,
                                               const std::filesystem::path& out_dir) {
    if (name == "train") return cmd_train(cfg, out_dir);
    if (name == "evaluate") return cmd_evaluate(cfg, out_dir);
    if (name == "attack") return cmd_attack(cfg, out_dir);
    if (name == "sweep-dims") return cmd_sweep_dims(cfg, out_dir);
    if (name == "sweep-eps") return cmd_sweep_eps(cfg, out_dir);
    if (name == "report") return cmd_report(cfg, out_dir);
    throw std::invalid_argument("unknown command '" + name +
                                "' (expected train, evaluate, attack, sweep-dims, sweep-eps "
                                "or report)");
}

}  // namespace drpriv
