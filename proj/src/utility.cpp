#include "drpriv/utility.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <sstream>

#include "drpriv/io.hpp"

namespace drpriv {

namespace {

std::vector<std::size_t> range_indices(std::size_t from, std::size_t count) {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), from);
    return idx;
}

PrivacyReport in_loop_privacy(const ModelBundle& bundle, const ImageDataset& test_data,
                              double epsilon) {
    return evaluate_epsilon_dr(make_network_fn(bundle.generator, bundle.gen_params),
                               make_network_fn(bundle.reconstructor, bundle.rec_params),
                               test_data, epsilon, "in_loop");
}

}  // namespace

UtilityReport accuracy(const BatchFn& classifier_fn, const BatchFn& transform_fn,
                       const ImageDataset& test_data, std::size_t d_prime) {
    if (test_data.images.empty()) throw std::invalid_argument("accuracy: empty test set");
    const std::size_t n = test_data.size();
    const auto m = static_cast<std::size_t>(test_data.num_levels);
    constexpr std::size_t kChunk = 64;

    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += kChunk) {
        const std::size_t count = std::min(kChunk, n - start);
        const Tensor x = pack_batch(test_data, range_indices(start, count));
        const Tensor probs = classifier_fn(transform_fn(x));
        if (probs.rank() != 2 || probs.dim(0) != count || probs.dim(1) != m)
            throw std::invalid_argument("accuracy: classifier emitted " +
                                        Tensor::shape_string(probs.shape()) + ", expected (" +
                                        std::to_string(count) + "," + std::to_string(m) + ")");
        for (std::size_t b = 0; b < count; ++b) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < m; ++k)
                if (probs.at2(b, k) > probs.at2(b, best)) best = k;
            if (static_cast<int>(best) == test_data.access_labels[start + b]) ++correct;
        }
    }

    UtilityReport report;
    report.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    report.num_levels = test_data.num_levels;
    report.d_prime = d_prime;
    report.compression_ratio =
        static_cast<double>(test_data.pixels()) / static_cast<double>(std::max<std::size_t>(1, d_prime));
    report.n_test = n;
    return report;
}

UtilityReport accuracy(const ModelBundle& bundle, const ImageDataset& test_data) {
    if (test_data.num_levels != bundle.num_levels)
        throw std::invalid_argument("accuracy: dataset has " +
                                    std::to_string(test_data.num_levels) +
                                    " levels but the classifier expects " +
                                    std::to_string(bundle.num_levels));
    return accuracy(make_network_fn(bundle.classifier, bundle.cls_params),
                    make_network_fn(bundle.generator, bundle.gen_params), test_data,
                    bundle.d_prime);
}

SweepTable dimension_sweep(const ImageDataset& train_data, const ImageDataset& test_data,
                           const TrainingConfig& cfg, const std::vector<std::size_t>& dims,
                           int m, const ModelWidths& widths) {
    if (dims.empty()) throw std::invalid_argument("dimension_sweep: empty dims list");
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (dims[i] < 1) throw std::invalid_argument("dimension_sweep: dims must be >= 1");
        if (i > 0 && dims[i] <= dims[i - 1])
            throw std::invalid_argument("dimension_sweep: dims must be strictly increasing");
    }

    SweepTable table;
    table.swept_name = "d_prime";
    for (std::size_t d_prime : dims) {
        TrainingConfig point_cfg = cfg;
        point_cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(d_prime));
        try {
            TrainResult result = train(train_data, point_cfg, d_prime, m, widths);
            SweepRow row;
            row.swept = static_cast<double>(d_prime);
            row.utility = accuracy(result.bundle, test_data);
            row.privacy = in_loop_privacy(result.bundle, test_data, cfg.weights.epsilon);
            row.seed = point_cfg.seed;
            table.rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            throw std::runtime_error("dimension_sweep: d_prime=" + std::to_string(d_prime) +
                                     ": " + e.what());
        }
    }
    return table;
}

SweepTable epsilon_sweep(const ImageDataset& train_data, const ImageDataset& test_data,
                         const TrainingConfig& cfg, const std::vector<double>& eps_list,
                         std::size_t d_prime, int m, const ModelWidths& widths) {
    if (eps_list.empty()) throw std::invalid_argument("epsilon_sweep: empty epsilon list");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (eps_list[i] < 0.0)
            throw std::invalid_argument("epsilon_sweep: epsilon must be non-negative");
        if (i > 0 && eps_list[i] <= eps_list[i - 1])
            throw std::invalid_argument("epsilon_sweep: epsilons must be strictly increasing");
    }

    SweepTable table;
    table.swept_name = "epsilon";
    for (double eps : eps_list) {
        TrainingConfig point_cfg = cfg;
        point_cfg.weights.epsilon = eps;
        try {
            TrainResult result = train(train_data, point_cfg, d_prime, m, widths);
            SweepRow row;
            row.swept = eps;
            row.utility = accuracy(result.bundle, test_data);
            row.privacy = in_loop_privacy(result.bundle, test_data, eps);
            row.seed = point_cfg.seed;
            table.rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            throw std::runtime_error("epsilon_sweep: epsilon=" + format_g9(eps) + ": " +
                                     e.what());
        }
    }
    return table;
}

DistanceMatchedComparison distance_matched_accuracy(const SweepTable& table_a,
                                                    const SweepTable& table_b, double band_lo,
                                                    double band_hi) {
    if (band_hi < band_lo)
        throw std::invalid_argument("distance_matched_accuracy: empty band (hi < lo)");
    DistanceMatchedComparison cmp;
    cmp.band_lo = band_lo;
    cmp.band_hi = band_hi;
    const auto select = [&](const SweepTable& table) {
        AccuracyRange range;
        for (const SweepRow& row : table.rows) {
            const double dist = row.privacy.mean_distance;
            if (dist < band_lo || dist > band_hi) continue;
            if (range.count == 0) {
                range.lo = range.hi = row.utility.accuracy;
            } else {
                range.lo = std::min(range.lo, row.utility.accuracy);
                range.hi = std::max(range.hi, row.utility.accuracy);
            }
            ++range.count;
        }
        return range;
    };
    cmp.a = select(table_a);
    cmp.b = select(table_b);
    return cmp;
}

std::string sweep_table_to_csv(const SweepTable& table) {
    std::string out = "swept,accuracy,mean_distance,epsilon,satisfied,d_prime,m,seed\n";
    for (const SweepRow& row : table.rows) {
        out += join_csv({format_g9(row.swept), format_g9(row.utility.accuracy),
                         format_g9(row.privacy.mean_distance), format_g9(row.privacy.epsilon),
                         row.privacy.satisfied ? "true" : "false",
                         std::to_string(row.utility.d_prime),
                         std::to_string(row.utility.num_levels), std::to_string(row.seed)});
        out += "\n";
    }
    return out;
}

SweepTable sweep_table_from_csv(const std::string& csv, const std::string& swept_name) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) ||
        split_csv_line(line) != std::vector<std::string>{"swept", "accuracy", "mean_distance",
                                                         "epsilon", "satisfied", "d_prime", "m",
                                                         "seed"})
        throw std::runtime_error("sweep csv: bad header");

    SweepTable table;
    table.swept_name = swept_name;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8)
            throw std::runtime_error("sweep csv: line " + std::to_string(lineno) +
                                     ": expected 8 fields");
        try {
            SweepRow row;
            row.swept = std::stod(f[0]);
            row.utility.accuracy = std::stod(f[1]);
            row.privacy.mean_distance = std::stod(f[2]);
            row.privacy.epsilon = std::stod(f[3]);
            if (f[4] != "true" && f[4] != "false")
                throw std::invalid_argument("satisfied must be true/false");
            row.privacy.satisfied = f[4] == "true";
            row.privacy.attacker_kind = "in_loop";
            row.utility.d_prime = static_cast<std::size_t>(std::stoull(f[5]));
            row.utility.num_levels = std::stoi(f[6]);
            row.seed = std::stoull(f[7]);
            table.rows.push_back(row);
        } catch (const std::exception& e) {
            throw std::runtime_error("sweep csv: line " + std::to_string(lineno) + ": " +
                                     e.what());
        }
    }
    return table;
}

void write_sweep_csv(const SweepTable& table, const std::filesystem::path& path) {
    write_text_file_atomic(path, sweep_table_to_csv(table));
}

SweepTable read_sweep_csv(const std::filesystem::path& path, const std::string& swept_name) {
    return sweep_table_from_csv(read_text_file(path), swept_name);
}

}  // namespace drpriv
