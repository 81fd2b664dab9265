#pragma once

#include <span>
#include <vector>

#include "icl/model.hpp"

namespace icl::grad {

/// Gradients of the query loss (prediction - y_q)^2. Tensors not used by
/// the model's mode stay empty. d_x covers every input coordinate including
/// the structurally-zero query label slot; masking is the attacker's job.
struct GradBundle {
  linalg::Mat d_w_in;
  linalg::Mat d_w_qk;
  linalg::Mat d_w_q, d_w_k;
  linalg::Mat d_w_v;
  linalg::Vec d_w_c;
  linalg::Mat d_p;
  linalg::Mat d_x;
  double loss = 0.0;
  double prediction = 0.0;

  void add(const GradBundle& other);
  void scale(double s);
  bool all_finite() const;
};

/// Reverse-mode gradients through the full forward pass (softmax Jacobian
/// included). `want_param_grads=false` computes only d_x, which is all PGD
/// needs. `want_input_grad=false` skips d_x for the training path.
GradBundle backward(const model::ModelParams& params, const linalg::Mat& x, double y_q,
                    bool want_param_grads = true, bool want_input_grad = true);

/// Gradient of the raw prediction with respect to the input matrix.
linalg::Mat prediction_input_grad(const model::ModelParams& params, const linalg::Mat& x);

/// Central-difference comparison over all parameter and input coordinates;
/// returns the worst relative error (1e-8 absolute floor). With ReLU,
/// coordinates whose perturbed pre-activations come within 10h of the kink
/// are skipped.
double fd_check(const model::ModelParams& params, const linalg::Mat& x, double y_q, double h);

/// Trainable tensors in their fixed order (the Adam state uses the same).
std::vector<std::span<double>> trainable_spans(model::ModelParams& params);
std::vector<std::span<const double>> grad_spans(const GradBundle& g, model::PEMode mode);

}  // namespace icl::grad
