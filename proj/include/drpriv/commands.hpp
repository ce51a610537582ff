#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "drpriv/config.hpp"
#include "drpriv/io.hpp"
#include "drpriv/privacy.hpp"
#include "drpriv/trainer.hpp"
#include "drpriv/utility.hpp"

namespace drpriv {

// Materializes the corpus a config describes: load/synthesize, optional
// center crop, access-level assignment, train/test split. Pure function
// of the config (all randomness comes from the config's seeds).
SplitPair prepare_data(const RunConfig& cfg);

// --- artifact codecs ---------------------------------------------------------
// Every emitted CSV re-parses under the matching reader below.

// header: iteration,l_r,l_d,l_c,l_g,mean_distance,max_param_delta
std::string history_to_csv(const TrainingHistory& history);
TrainingHistory history_from_csv(const std::string& csv);

// header: accuracy,num_levels,d_prime,compression_ratio,n_test
std::string utility_to_csv(const UtilityReport& report);
UtilityReport utility_from_csv(const std::string& csv);

// header: attacker_kind,mean_distance,epsilon,satisfied,n_test
std::string privacy_to_csv(const std::vector<PrivacyReport>& rows);
std::vector<PrivacyReport> privacy_from_csv(const std::string& csv);

// Two-row tile: originals across the top, reconstructions beneath,
// quantized by round(value*255).
GrayImage render_grid(const std::vector<ReconstructionPair>& pairs);
void export_grid(const std::vector<ReconstructionPair>& pairs,
                 const std::filesystem::path& path);

// --- commands ----------------------------------------------------------------
// Each writes its artifacts under out_dir (created if missing) and
// returns the paths written. Failures surface as exceptions.

std::vector<std::filesystem::path> cmd_train(const RunConfig& cfg,
                                             const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_evaluate(const RunConfig& cfg,
                                                const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_attack(const RunConfig& cfg,
                                              const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_sweep_dims(const RunConfig& cfg,
                                                  const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_sweep_eps(const RunConfig& cfg,
                                                 const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_report(const RunConfig& cfg,
                                              const std::filesystem::path& out_dir);

// Dispatch by command name: train, evaluate, attack, sweep-dims,
// sweep-eps, report. Unknown names throw std::invalid_argument.
std::vector<std::filesystem::path> run_command(const std::string& name, const RunConfig& cfg,
                                               const std::filesystem::path& out_dir);

}  // namespace drpriv
