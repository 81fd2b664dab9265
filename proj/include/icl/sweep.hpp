#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "icl/analysis.hpp"
#include "icl/config.hpp"
#include "icl/datagen.hpp"
#include "icl/model.hpp"
#include "icl/train.hpp"

namespace icl::sweep {

/// Fully-resolved experiment configuration. Desk defaults keep a full sweep
/// tractable on one machine; paper mode restores the published scale.
struct RunConfig {
  int d = 5;
  int d_m = 64;
  int n_train = 309;
  int n_val = 2000;
  int epochs = 1500;
  double lr = 1e-5;
  double beta1 = 0.9, beta2 = 0.999, eps_adam = 1e-8;
  std::vector<int> t_list = {6, 7, 8, 9, 10, 12, 15, 20, 25, 30};
  std::vector<double> eps_list = {0.0, 0.05, 0.2, 0.3};
  std::vector<std::string> pe_modes = {"none", "trainable", "rope"};
  std::vector<uint64_t> seeds = {0, 1, 2};
  int attack_iters = 40;
  double attack_alpha_frac = 0.1;  // alpha = eps * frac
  double pe_init_scale = 25.0;
  std::string activation = "relu";
  std::string dist = "gaussian";
  std::string out_dir = "out";
  int threads = 0;  // 0 = leave the parallel runtime's default
  bool paper_mode = false;

  static std::vector<std::string> known_keys();
  static RunConfig from_kv(const config::KVConfig& kv);

  std::string canonical_text() const;
  std::string run_id() const;  // FNV-1a of the canonical text, hex

  model::Activation activation_enum() const;
  datagen::InputDist dist_enum() const;
};

uint64_t fnv1a64(const std::string& s);

struct CellOutput {
  bool failed = false;
  std::string fail_reason;
  model::ModelParams params;
  std::vector<double> loss_curve;
};

/// Dataset for one sweep cell; deterministic in (seed, t) and the config's
/// data settings.
datagen::Dataset cell_dataset(const RunConfig& cfg, int t, uint64_t seed);

/// Seed-paired initial parameters: every mode at the same seed shares the
/// common tensors.
model::ModelParams cell_init(const RunConfig& cfg, model::PEMode mode, int t, uint64_t seed);

/// Train one (mode, t, seed) cell. A non-finite loss marks the cell failed
/// instead of throwing.
CellOutput train_cell(const RunConfig& cfg, model::PEMode mode, int t, uint64_t seed);

/// Clean/attacked gap records for the given budgets (eps=0 is clean).
std::vector<analysis::GapRecord> eval_cell(const RunConfig& cfg, const model::ModelParams& params,
                                           int t, uint64_t seed,
                                           const std::vector<double>& eps_list);

uint64_t eval_seed_for(uint64_t seed);

/// The full experiment: trains every (pe_mode, t, seed) cell, evaluates all
/// budgets, appends records keyed by the config's run id, and emits the
/// aggregate figure CSVs, the context-length comparison table and SVG charts.
void run_sweep(const RunConfig& cfg, std::ostream& log);

/// Invariant suite behind the `selfcheck` subcommand. Returns the number of
/// failed checks. `inject_grad_bug` is a test fixture that corrupts one
/// analytic gradient coordinate to prove the FD comparison can fail.
int run_selfcheck(uint64_t seed, bool inject_grad_bug, std::ostream& os);

}  // namespace icl::sweep
