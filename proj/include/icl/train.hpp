#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "icl/datagen.hpp"
#include "icl/grad.hpp"
#include "icl/model.hpp"

namespace icl::train {

struct TrainConfig {
  double lr = 1e-5;
  int epochs = 3000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  uint64_t seed = 0;
};

/// First/second-moment accumulators, one flat vector per trainable tensor in
/// the order of grad::trainable_spans.
struct AdamState {
  std::vector<linalg::Vec> m;
  std::vector<linalg::Vec> v;
  long long step = 0;
};

AdamState make_adam_state(model::ModelParams& params);

/// One Adam update with bias correction. Deterministic.
void adam_step(model::ModelParams& params, const grad::GradBundle& grads, AdamState& state,
               const TrainConfig& cfg);

/// Mean query loss and mean parameter gradients over one full batch.
/// Per-prompt work runs through parallel_for; the reduction is a fixed
/// pairwise tree, so the result is bit-identical for any thread count.
grad::GradBundle batch_grad(const model::ModelParams& params,
                            std::span<const datagen::Prompt> prompts);

/// Serial reference: plain ascending-order accumulation. Kept for tests and
/// the benchmark; agrees with batch_grad up to summation rounding.
grad::GradBundle batch_grad_serial(const model::ModelParams& params,
                                   std::span<const datagen::Prompt> prompts);

/// Mean of (prediction - y_q)^2, fixed-order (tree) summation.
double mean_query_loss(const model::ModelParams& params,
                       std::span<const datagen::Prompt> prompts);
double mean_query_loss_serial(const model::ModelParams& params,
                              std::span<const datagen::Prompt> prompts);

struct TrainResult {
  model::ModelParams params;
  std::vector<double> loss_curve;  // entry e: full-batch loss after epoch e's step
};

/// Full-batch Adam on a fixed prompt set. The interface takes only train
/// prompts, so validation data cannot leak in. Aborts with a diagnostic on a
/// non-finite loss. loss_curve.back() equals the train risk of the returned
/// parameters exactly.
TrainResult run_training(std::span<const datagen::Prompt> train_prompts,
                         model::ModelParams params, const TrainConfig& cfg);

void write_loss_curve_csv(const std::string& path, const std::vector<double>& curve);

}  // namespace icl::train
