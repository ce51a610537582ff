// Optional corpus-gated acceptance check. Two clauses, each enabled by an
// environment variable; when neither is set the binary reports SKIP and
// exits 77 so CI can mark it skipped rather than failed.
//
//   DRPRIV_ATT_DIR=<dir>   train at the full default budget on a real face
//                          corpus (one access level per subject, d'=7) and
//                          require test accuracy >= 0.85.
//   DRPRIV_RUN_OPTIONAL=1  train a small synthetic model and require the
//                          fresh-attacker distance to be stable across
//                          three attacker seeds (coefficient of variation
//                          below 20%).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "drpriv/dataset.hpp"
#include "drpriv/models.hpp"
#include "drpriv/privacy.hpp"
#include "drpriv/trainer.hpp"
#include "drpriv/utility.hpp"

using namespace drpriv;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

int corpus_clause(const char* root) {
    const auto start = std::chrono::steady_clock::now();
    ImageDataset full = load_image_directory(root);
    if (full.height % 4 != 0 || full.width % 4 != 0) {
        std::cout << "FAIL: criterion 8: corpus images are " << full.height << "x" << full.width
                  << "; both sides must be divisible by 4" << std::endl;
        return 1;
    }
    const int subjects =
        static_cast<int>(std::set<int>(full.subject_ids.begin(), full.subject_ids.end()).size());
    full = assign_access_levels(full, subjects, 1);  // one level per subject
    const SplitPair data = split_train_test(full, 0.2, 1);

    TrainingConfig cfg;  // full default budget
    const TrainResult result = train(data.train, cfg, 7, subjects);
    const UtilityReport utility = accuracy(result.bundle, data.test);

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = utility.accuracy >= 0.85;
    std::cout << (pass ? "PASS" : "FAIL") << ": criterion 8: corpus accuracy "
              << fmt(utility.accuracy) << " over " << subjects << " subjects (floor 0.85); "
              << fmt(elapsed) << " s" << std::endl;
    return pass ? 0 : 1;
}

int seed_stability_clause() {
    const auto start = std::chrono::steady_clock::now();
    SynthSpec spec{2, 60, 16, 16, 0.1, 21};
    const ImageDataset full = assign_access_levels(synth_dataset(spec), 2, 21);
    const SplitPair data = split_train_test(full, 0.2, 21);

    TrainingConfig cfg;
    cfg.steps_r = cfg.steps_d = cfg.steps_c = cfg.steps_g = 10;
    cfg.global_iters = 10;
    cfg.batch_size = 16;
    cfg.seed = 21;
    const TrainResult result = train(data.train, cfg, 2, 2);

    std::vector<double> distances;
    for (std::uint64_t seed : {31ULL, 41ULL, 51ULL}) {
        AttackConfig ac;
        ac.steps = 400;
        ac.lr = 0.01;
        ac.batch_size = 16;
        ac.seed = seed;
        const AttackerModel attacker =
            train_attacker(result.bundle.generator, result.bundle.gen_params, data.train, ac);
        const PrivacyReport rep = evaluate_epsilon_dr(
            make_network_fn(result.bundle.generator, result.bundle.gen_params),
            make_network_fn(attacker.spec, attacker.params), data.test, 0.0, "fresh");
        distances.push_back(rep.mean_distance);
    }

    double mean = 0.0;
    for (double d : distances) mean += d;
    mean /= static_cast<double>(distances.size());
    double var = 0.0;
    for (double d : distances) var += (d - mean) * (d - mean);
    var /= static_cast<double>(distances.size());
    const double cv = mean > 0.0 ? std::sqrt(var) / mean : std::numeric_limits<double>::infinity();

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = cv < 0.20;
    std::cout << (pass ? "PASS" : "FAIL") << ": criterion 8: fresh-attacker distances ["
              << fmt(distances[0]) << " " << fmt(distances[1]) << " " << fmt(distances[2])
              << "] across 3 seeds, CV " << fmt(cv) << " (limit 0.2); " << fmt(elapsed) << " s"
              << std::endl;
    return pass ? 0 : 1;
}

}  // namespace

int main() {
    try {
        const char* att_dir = std::getenv("DRPRIV_ATT_DIR");
        const char* run_optional = std::getenv("DRPRIV_RUN_OPTIONAL");
        if (att_dir != nullptr && *att_dir != '\0') {
            int rc = corpus_clause(att_dir);
            rc |= seed_stability_clause();
            return rc;
        }
        if (run_optional != nullptr && *run_optional != '\0') return seed_stability_clause();
        std::cout << "SKIP: criterion 8: set DRPRIV_ATT_DIR to a face corpus or "
                     "DRPRIV_RUN_OPTIONAL=1 to enable"
                  << std::endl;
        return 77;
    } catch (const std::exception& e) {
        std::cout << "FAIL: criterion 8: unhandled error: " << e.what() << std::endl;
        return 1;
    }
}
