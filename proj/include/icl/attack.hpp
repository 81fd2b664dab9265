#pragma once

#include <functional>
#include <span>
#include <vector>

#include "icl/datagen.hpp"
#include "icl/grad.hpp"
#include "icl/model.hpp"

namespace icl::attack {

/// L2 (Frobenius) PGD configuration. The mask covers the x-coordinates
/// (columns 0..d-1) of every row; the label column is never touched, and
/// the query row can be frozen for ablations.
struct AttackSpec {
  double eps = 0.0;
  int iters = 40;
  double alpha = 0.0;  // step size; l2() sets the paper rule eps/10
  bool perturb_query = true;

  static AttackSpec l2(double eps, int iters = 40) {
    AttackSpec s;
    s.eps = eps;
    s.iters = iters;
    s.alpha = eps / 10.0;
    return s;
  }
};

struct LossGrad {
  double loss = 0.0;
  linalg::Mat d_x;
};

/// A differentiable scalar predictor on prompt matrices. Wrapping the
/// transformer is the normal case; tests plug in closed-form stubs.
struct PromptModel {
  std::function<double(const linalg::Mat&)> predict;
  std::function<LossGrad(const linalg::Mat&, double)> loss_grad;
  std::function<linalg::Mat(const linalg::Mat&)> predict_grad;
};

PromptModel wrap_model(const model::ModelParams& params);

/// Zero the label column (and the query row when frozen) of an input-shaped
/// gradient, in place.
void mask_input_grad(linalg::Mat& g, const AttackSpec& spec);

/// Projected gradient ascent on (prediction - y_q)^2 inside the Frobenius
/// ball of radius eps, zero-initialized, normalized-gradient steps, best
/// iterate returned. Unmasked coordinates of the result are bit-identical
/// to x, and the result never has lower loss than x itself.
linalg::Mat pgd(const PromptModel& m, const linalg::Mat& x, double y_q, const AttackSpec& spec,
                const std::function<void(const linalg::Mat&)>& on_iterate = {});

/// Mean attacked loss over a prompt set (Frobenius-ball sup approximated by
/// PGD). Deterministic; parallel over prompts with a fixed-order reduction.
double adversarial_risk(const PromptModel& m, std::span<const datagen::Prompt> prompts,
                        const AttackSpec& spec);

/// PGD applied to every prompt; labels and tasks are carried over.
std::vector<datagen::Prompt> attack_prompts(const PromptModel& m,
                                            std::span<const datagen::Prompt> prompts,
                                            const AttackSpec& spec);

/// Mean outer-product Gram matrix of the example x-rows (first t rows).
linalg::Mat example_gram(const linalg::Mat& x);

/// Spectral norm of G'_t - G_t between an attacked prompt and its original.
double gram_perturbation(const linalg::Mat& x_clean, const linalg::Mat& x_attacked);

}  // namespace icl::attack
