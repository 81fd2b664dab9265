#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icl/attack.hpp"
#include "icl/datagen.hpp"
#include "icl/model.hpp"

namespace icl::analysis {

/// One experiment cell. `attacked` is set only when a positive attack budget
/// was applied; an eps=0 attack is the clean evaluation.
struct GapRecord {
  int t = 0;
  double eps = 0.0;
  model::PEMode pe_mode = model::PEMode::none;
  uint64_t seed = 0;
  bool attacked = false;
  double train_risk = 0.0;
  double val_risk = 0.0;
  double gap = 0.0;  // val_risk - train_risk, exact
};

struct EffWeight {
  linalg::Vec w_eff;
  double residual_rms = 0.0;
};

/// Mean of (prediction - y_q)^2, fixed-order summation.
double risk(const model::ModelParams& params, std::span<const datagen::Prompt> prompts);
double risk(const std::function<double(const linalg::Mat&)>& predict,
            std::span<const datagen::Prompt> prompts);

/// Clean or attacked generalization gap. Validation prompts are regenerated
/// from the stored validation tasks and eval_seed. In attacked mode both the
/// train prompts and the fresh validation prompts are attacked with the same
/// spec before the risks are taken.
GapRecord generalization_gap(const model::ModelParams& params, const datagen::Dataset& ds,
                             uint64_t eval_seed,
                             const std::optional<attack::AttackSpec>& atk = std::nullopt);

/// Best linear-in-x_q approximation of the predictor for a fixed context:
/// sample x_q ~ N(0, I_d), regress predictions on queries without intercept.
EffWeight effective_weight(const std::function<double(const linalg::Mat&)>& predict,
                           const datagen::Prompt& context, int n_queries, uint64_t seed);
EffWeight effective_weight(const model::ModelParams& params, const datagen::Prompt& context,
                           int n_queries, uint64_t seed);

/// Mean over contexts of ||w_eff(PE) - w_eff(NoPE)||_2 for seed-paired
/// models; the empirical stand-in for the bounded-PE-effect constant.
double c_pe_estimate(const std::function<double(const linalg::Mat&)>& predict_pe,
                     const std::function<double(const linalg::Mat&)>& predict_nope,
                     std::span<const datagen::Prompt> contexts, int n_queries, uint64_t seed,
                     std::vector<double>* per_context = nullptr);
double c_pe_estimate(const model::ModelParams& pe_params, const model::ModelParams& nope_params,
                     std::span<const datagen::Prompt> contexts, int n_queries, uint64_t seed,
                     std::vector<double>* per_context = nullptr);

/// Monte-Carlo Rademacher complexity of the linear bias class:
/// (c_pe/m) * E_sigma || sum_j sigma_j x_j ||_2. `stderr_out`, when given,
/// receives the Monte-Carlo standard error of the estimate.
double bias_rc_mc(double c_pe, const std::vector<linalg::Vec>& queries, int n_sigma,
                  uint64_t seed, double* stderr_out = nullptr);

/// Empirical local estimate of the input Lipschitz constant of the
/// prediction: max masked ||d_x prediction||_F over the prompts, optionally
/// probed along PGD trajectories, times a safety factor.
double lipschitz_est(const attack::PromptModel& m, std::span<const datagen::Prompt> prompts,
                     double safety = 2.0, const attack::AttackSpec* probe = nullptr,
                     int probe_limit = 200);

// GapRecord CSV: t,eps,pe_mode,seed,attacked,train_risk,val_risk,gap
std::string gap_record_csv_header();
std::string to_csv_row(const GapRecord& r);
GapRecord gap_record_from_csv_row(const std::string& line);
void append_gap_records_csv(const std::string& path, std::span<const GapRecord> records);
std::vector<GapRecord> read_gap_records_csv(const std::string& path);

}  // namespace icl::analysis
