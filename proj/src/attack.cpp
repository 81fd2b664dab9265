#include "icl/attack.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "icl/par.hpp"

namespace icl::attack {

using datagen::Prompt;
using linalg::Mat;

PromptModel wrap_model(const model::ModelParams& params) {
  auto sp = std::make_shared<model::ModelParams>(params);
  PromptModel pm;
  pm.predict = [sp](const Mat& x) { return model::forward(*sp, x); };
  pm.loss_grad = [sp](const Mat& x, double y) {
    grad::GradBundle g = grad::backward(*sp, x, y, /*want_param_grads=*/false,
                                        /*want_input_grad=*/true);
    return LossGrad{g.loss, std::move(g.d_x)};
  };
  pm.predict_grad = [sp](const Mat& x) { return grad::prediction_input_grad(*sp, x); };
  return pm;
}

void mask_input_grad(Mat& g, const AttackSpec& spec) {
  const int label_col = g.cols - 1;
  for (int i = 0; i < g.rows; ++i) g(i, label_col) = 0.0;
  if (!spec.perturb_query) {
    double* qrow = g.row(g.rows - 1);
    for (int j = 0; j < g.cols; ++j) qrow[j] = 0.0;
  }
}

namespace {
// x plus the masked perturbation; exact zeros of delta leave bits untouched.
Mat apply_delta(const Mat& x, const Mat& delta) {
  Mat out = x;
  for (size_t k = 0; k < out.data.size(); ++k)
    if (delta.data[k] != 0.0) out.data[k] += delta.data[k];
  return out;
}
}  // namespace

Mat pgd(const PromptModel& m, const Mat& x, double y_q, const AttackSpec& spec,
        const std::function<void(const Mat&)>& on_iterate) {
  if (spec.eps < 0.0) throw std::invalid_argument("pgd: negative budget");
  if (spec.eps == 0.0) return x;
  if (spec.alpha <= 0.0) throw std::invalid_argument("pgd: alpha must be positive when eps > 0");

  Mat delta(x.rows, x.cols);
  Mat best_delta = delta;
  double best_loss = -1.0;
  for (int it = 0; it < spec.iters; ++it) {
    Mat xc = apply_delta(x, delta);
    if (on_iterate) on_iterate(xc);
    LossGrad lg = m.loss_grad(xc, y_q);
    if (lg.loss > best_loss) {
      best_loss = lg.loss;
      best_delta = delta;
    }
    mask_input_grad(lg.d_x, spec);
    double gn = linalg::frobenius_norm(lg.d_x);
    if (gn == 0.0) break;  // stalled; further iterates would repeat
    linalg::Mat& g = lg.d_x;
    const double step = spec.alpha / gn;
    for (size_t k = 0; k < delta.data.size(); ++k) delta.data[k] += step * g.data[k];
    double dn = linalg::frobenius_norm(delta);
    if (dn > spec.eps) {
      const double shrink = spec.eps / dn;
      for (double& v : delta.data) v *= shrink;
    }
  }
  // last iterate was stepped to but never scored
  Mat x_last = apply_delta(x, delta);
  double diff = m.predict(x_last) - y_q;
  if (diff * diff > best_loss) return x_last;
  return apply_delta(x, best_delta);
}

double adversarial_risk(const PromptModel& m, std::span<const Prompt> prompts,
                        const AttackSpec& spec) {
  const int n = static_cast<int>(prompts.size());
  if (n == 0) throw std::invalid_argument("adversarial_risk: empty prompt set");
  std::vector<double> losses(n);
  par::parallel_for(n, [&](int i) {
    Mat xa = pgd(m, prompts[i].x, prompts[i].query_label, spec);
    double diff = m.predict(xa) - prompts[i].query_label;
    losses[i] = diff * diff;
  });
  return par::tree_mean(std::move(losses));
}

std::vector<Prompt> attack_prompts(const PromptModel& m, std::span<const Prompt> prompts,
                                   const AttackSpec& spec) {
  std::vector<Prompt> out(prompts.begin(), prompts.end());
  par::parallel_for(static_cast<int>(out.size()), [&](int i) {
    out[i].x = pgd(m, prompts[i].x, prompts[i].query_label, spec);
  });
  return out;
}

Mat example_gram(const Mat& x) {
  const int t = x.rows - 1;
  const int d = x.cols - 1;
  Mat g(d, d);
  for (int i = 0; i < t; ++i) {
    const double* row = x.row(i);
    for (int a = 0; a < d; ++a) linalg::axpy(g.row(a), row[a], row, d);
  }
  for (double& v : g.data) v /= static_cast<double>(t);
  return g;
}

double gram_perturbation(const Mat& x_clean, const Mat& x_attacked) {
  Mat gc = example_gram(x_clean);
  Mat ga = example_gram(x_attacked);
  for (size_t k = 0; k < ga.data.size(); ++k) ga.data[k] -= gc.data[k];
  return linalg::spectral_norm(ga);
}

}  // namespace icl::attack
