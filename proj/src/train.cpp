#include "icl/train.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "icl/binio.hpp"
#include "icl/par.hpp"

namespace icl::train {

using datagen::Prompt;
using grad::GradBundle;
using model::ModelParams;

AdamState make_adam_state(ModelParams& params) {
  AdamState st;
  for (auto span : grad::trainable_spans(params)) {
    st.m.emplace_back(span.size(), 0.0);
    st.v.emplace_back(span.size(), 0.0);
  }
  return st;
}

void adam_step(ModelParams& params, const GradBundle& grads, AdamState& state,
               const TrainConfig& cfg) {
  auto psp = grad::trainable_spans(params);
  auto gsp = grad::grad_spans(grads, params.pe_mode);
  if (psp.size() != state.m.size() || psp.size() != gsp.size())
    throw std::invalid_argument("adam_step: state does not match parameters");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (size_t ti = 0; ti < psp.size(); ++ti) {
    if (psp[ti].size() != gsp[ti].size())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    double* m = state.m[ti].data();
    double* v = state.v[ti].data();
    double* p = psp[ti].data();
    const double* g = gsp[ti].data();
    for (size_t k = 0; k < psp[ti].size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      double mhat = m[k] / bc1;
      double vhat = v[k] / bc2;
      p[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps_adam);
    }
  }
}

GradBundle batch_grad(const ModelParams& params, std::span<const Prompt> prompts) {
  const int n = static_cast<int>(prompts.size());
  if (n == 0) throw std::invalid_argument("batch_grad: empty prompt set");
  std::vector<GradBundle> per(n);
  par::parallel_for(n, [&](int i) {
    per[i] = grad::backward(params, prompts[i].x, prompts[i].query_label,
                            /*want_param_grads=*/true, /*want_input_grad=*/false);
  });
  GradBundle total = par::tree_reduce(std::move(per),
                                      [](GradBundle& a, const GradBundle& b) { a.add(b); });
  total.scale(1.0 / n);
  return total;
}

GradBundle batch_grad_serial(const ModelParams& params, std::span<const Prompt> prompts) {
  if (prompts.empty()) throw std::invalid_argument("batch_grad_serial: empty prompt set");
  GradBundle total = grad::backward(params, prompts[0].x, prompts[0].query_label, true, false);
  for (size_t i = 1; i < prompts.size(); ++i)
    total.add(grad::backward(params, prompts[i].x, prompts[i].query_label, true, false));
  total.scale(1.0 / static_cast<double>(prompts.size()));
  return total;
}

double mean_query_loss(const ModelParams& params, std::span<const Prompt> prompts) {
  const int n = static_cast<int>(prompts.size());
  if (n == 0) throw std::invalid_argument("mean_query_loss: empty prompt set");
  std::vector<double> losses(n);
  par::parallel_for(n, [&](int i) {
    double diff = model::forward(params, prompts[i].x) - prompts[i].query_label;
    losses[i] = diff * diff;
  });
  return par::tree_mean(std::move(losses));
}

double mean_query_loss_serial(const ModelParams& params, std::span<const Prompt> prompts) {
  std::vector<double> losses;
  losses.reserve(prompts.size());
  for (const Prompt& p : prompts) {
    double diff = model::forward(params, p.x) - p.query_label;
    losses.push_back(diff * diff);
  }
  return par::serial_mean(losses);
}

TrainResult run_training(std::span<const Prompt> train_prompts, ModelParams params,
                         const TrainConfig& cfg) {
  if (!train_prompts.empty() && train_prompts[0].t() != params.t_max)
    throw std::invalid_argument("run_training: dataset t does not match model t_max");
  TrainResult res;
  res.loss_curve.reserve(cfg.epochs);
  AdamState state = make_adam_state(params);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    GradBundle g = batch_grad(params, train_prompts);
    if (!g.all_finite())
      throw std::runtime_error("run_training: non-finite loss/gradient at epoch " +
                               std::to_string(epoch) + " (loss=" + std::to_string(g.loss) + ")");
    // g.loss is the post-step loss of the previous epoch
    if (epoch > 1) res.loss_curve.push_back(g.loss);
    adam_step(params, g, state, cfg);
  }
  if (cfg.epochs > 0) res.loss_curve.push_back(mean_query_loss(params, train_prompts));
  res.params = std::move(params);
  return res;
}

void write_loss_curve_csv(const std::string& path, const std::vector<double>& curve) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_loss_curve_csv: cannot open " + path);
  os << "epoch,loss\n";
  for (size_t e = 0; e < curve.size(); ++e)
    os << (e + 1) << "," << binio::fmt_g17(curve[e]) << "\n";
}

}  // namespace icl::train
