#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pcd/augment.hpp"
#include "pcd/context.hpp"
#include "pcd/corpus.hpp"
#include "pcd/diffusion.hpp"
#include "pcd/dlfl.hpp"
#include "pcd/eval.hpp"
#include "pcd/slicing.hpp"
#include "pcd/spectra.hpp"

namespace pcd {

enum class EvalSpace { Full, Context, Both };

struct RunConfig {
  std::string corpus;
  std::string out_dir;  // empty: nothing written
  std::vector<Scenario> scenarios{Scenario::Origin, Scenario::Pcd, Scenario::Undersample, Scenario::Resample};
  std::vector<std::string> methods{"dstar", "ochiai", "barinel", "gp02", "mlpfl"};

  // diffusion model and schedule
  int steps = 1000;
  double lr = 3e-4;
  std::string op = "AdamW";
  double beta_1 = 1e-4;
  double beta_T = 0.02;
  double alpha = 1.0;

  double gamma = 2.0;
  double p_uncond = 0.1;
  int sample_steps = 25;
  int solver_order = 2;
  int epochs = 400;
  int patience = 50;
  int batch_size = 16;
  DenoiserConfig denoiser;
  int mlp_steps = 2000;
  EvalSpace eval_space = EvalSpace::Full;
  TiePolicy tie_policy = TiePolicy::Ordinal;
  bool reject_empty = false;
  int jobs = 1;
  std::uint64_t seed = 2024;
};

/// key = value lines, `#` comments. Keys: steps, lr, op, beta_1, beta_T,
/// alpha, corpus, scenarios, methods, seed, out, gamma, p_uncond,
/// sample_steps, order, epochs, patience, batch_size, eval_space,
/// reject_empty, jobs, channels, bottleneck, groups.
void apply_config_file(RunConfig& cfg, const std::string& path);

std::string to_string(EvalSpace s);
EvalSpace eval_space_from_string(const std::string& text);

/// Everything computed for one version.
struct VersionOutcome {
  std::string id;
  std::vector<StmtIndex> faulty;
  std::string error;  // empty on success
  std::vector<StmtIndex> stm_sc, stm_pca, stm_fusion;
  int m = 0;
  int train_epochs = 0;
  bool trained = false;
  std::map<std::string, AugmentedDataset> datasets;   // by scenario
  std::map<std::string, VersionResult> results;       // "<scenario>/<method>/<space>"
};

/// One version through all configured scenarios and methods.
VersionOutcome run_version(const FaultyVersion& version, const RunConfig& cfg);

struct RunResult {
  MetricsReport report;
  std::vector<VersionOutcome> versions;
  int models_trained = 0;

  bool any_error() const { return !report.errors.empty(); }
};

/// Runs every version of cfg.corpus (in a pool of cfg.jobs workers), then
/// aggregates. A version that throws is recorded in report.errors and left
/// out of the aggregates.
RunResult run_pipeline(const RunConfig& cfg);
RunResult run_versions(const std::vector<FaultyVersion>& versions, const RunConfig& cfg);

/// JSON dump {stm_sc, stm_pca, stm_fusion, alpha, m, k}.
std::string context_json(const VersionOutcome& v, double alpha);

/// report.json, report.txt and rimp.csv in `dir`, plus per-version context
/// and augmented datasets under dir/versions/<id>/.
void emit_report(const RunResult& result, const RunConfig& cfg, const std::string& dir);

}  // namespace pcd
