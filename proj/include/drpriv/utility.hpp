#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "drpriv/dataset.hpp"
#include "drpriv/privacy.hpp"
#include "drpriv/trainer.hpp"

namespace drpriv {

struct UtilityReport {
    double accuracy = 0.0;
    int num_levels = 1;
    std::size_t d_prime = 0;
    double compression_ratio = 0.0;  // pixel_count / d_prime
    std::size_t n_test = 0;
};

// Argmax of classifier(transform(x)) against the access labels; ties
// break toward the lowest class index.
UtilityReport accuracy(const BatchFn& classifier_fn, const BatchFn& transform_fn,
                       const ImageDataset& test_data, std::size_t d_prime);

UtilityReport accuracy(const ModelBundle& bundle, const ImageDataset& test_data);

struct SweepRow {
    double swept = 0.0;  // d_prime or epsilon
    UtilityReport utility;
    PrivacyReport privacy;
    std::uint64_t seed = 0;  // the seed this row was trained with
};

struct SweepTable {
    std::string swept_name;  // "d_prime" | "epsilon"
    std::vector<SweepRow> rows;
};

// One full training run per code dimension, seeded independently per
// (cfg.seed, d'); privacy measured against the in-loop reconstructor.
SweepTable dimension_sweep(const ImageDataset& train_data, const ImageDataset& test_data,
                           const TrainingConfig& cfg, const std::vector<std::size_t>& dims,
                           int m, const ModelWidths& widths = ModelWidths{});

// One full training run per epsilon value (same seed, only the penalty
// target changes); rows record achieved distance vs configured epsilon.
SweepTable epsilon_sweep(const ImageDataset& train_data, const ImageDataset& test_data,
                         const TrainingConfig& cfg, const std::vector<double>& eps_list,
                         std::size_t d_prime, int m, const ModelWidths& widths = ModelWidths{});

struct AccuracyRange {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;  // rows selected; 0 = "no rows in band"
};

struct DistanceMatchedComparison {
    double band_lo = 0.0;
    double band_hi = 0.0;
    AccuracyRange a;
    AccuracyRange b;
};

// Rows of each table whose mean_distance falls in [band_lo, band_hi],
// reported as side-by-side accuracy ranges.
DistanceMatchedComparison distance_matched_accuracy(const SweepTable& table_a,
                                                    const SweepTable& table_b, double band_lo,
                                                    double band_hi);

// CSV header: swept,accuracy,mean_distance,epsilon,satisfied,d_prime,m,seed
std::string sweep_table_to_csv(const SweepTable& table);
SweepTable sweep_table_from_csv(const std::string& csv, const std::string& swept_name);
void write_sweep_csv(const SweepTable& table, const std::filesystem::path& path);
SweepTable read_sweep_csv(const std::filesystem::path& path, const std::string& swept_name);

}  // namespace drpriv
