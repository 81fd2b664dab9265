#include "icl/grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace icl::grad {

using linalg::Mat;
using linalg::Vec;
using model::Activation;
using model::ModelParams;
using model::PEMode;

namespace {
void add_mat(Mat& a, const Mat& b) {
  for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}
}  // namespace

void GradBundle::add(const GradBundle& other) {
  add_mat(d_w_in, other.d_w_in);
  add_mat(d_w_qk, other.d_w_qk);
  add_mat(d_w_q, other.d_w_q);
  add_mat(d_w_k, other.d_w_k);
  add_mat(d_w_v, other.d_w_v);
  for (size_t i = 0; i < d_w_c.size(); ++i) d_w_c[i] += other.d_w_c[i];
  add_mat(d_p, other.d_p);
  add_mat(d_x, other.d_x);
  loss += other.loss;
  prediction += other.prediction;
}

void GradBundle::scale(double s) {
  for (double& v : d_w_in.data) v *= s;
  for (double& v : d_w_qk.data) v *= s;
  for (double& v : d_w_q.data) v *= s;
  for (double& v : d_w_k.data) v *= s;
  for (double& v : d_w_v.data) v *= s;
  for (double& v : d_w_c) v *= s;
  for (double& v : d_p.data) v *= s;
  for (double& v : d_x.data) v *= s;
  loss *= s;
  prediction *= s;
}

bool GradBundle::all_finite() const {
  return linalg::all_finite(d_w_in) && linalg::all_finite(d_w_qk) &&
         linalg::all_finite(d_w_q) && linalg::all_finite(d_w_k) &&
         linalg::all_finite(d_w_v) && linalg::all_finite(d_w_c) &&
         linalg::all_finite(d_p) && linalg::all_finite(d_x) && std::isfinite(loss);
}

namespace {
enum class SeedKind { loss, prediction };
}

// The loss reads only the query row of H', so the activation/value/softmax
// stages backpropagate a single row; their parameter gradients are rank-one
// updates. Only the read-in stage (and the rope key path) touch full
// matrices.
static GradBundle backward_core(const ModelParams& params, const Mat& x, double y_q,
                                bool want_param_grads, bool want_input_grad, SeedKind seed) {
  const int n = x.rows;
  const int dm = params.d_m;
  const int q = n - 1;
  const double inv_sqrt_dm = 1.0 / std::sqrt(static_cast<double>(dm));

  model::ForwardTrace tr;
  double pred = model::forward(params, x, &tr);

  GradBundle g;
  g.prediction = pred;
  double diff = pred - y_q;
  g.loss = diff * diff;
  if (want_param_grads) {
    g.d_w_in = Mat(params.d + 1, dm);
    if (params.pe_mode == PEMode::rope) {
      g.d_w_q = Mat(dm, dm);
      g.d_w_k = Mat(dm, dm);
    } else {
      g.d_w_qk = Mat(dm, dm);
    }
    g.d_w_v = Mat(dm, dm);
    g.d_w_c.assign(dm, 0.0);
    if (params.pe_mode == PEMode::trainable) g.d_p = Mat(params.t_max + 1, dm);
  }

  const double dpred = (seed == SeedKind::loss) ? 2.0 * diff : 1.0;

  // readout and activation (query row only)
  Vec dz(dm);
  for (int j = 0; j < dm; ++j)
    dz[j] = dpred * params.w_c[j] * model::activation_grad(params.act, tr.pre(q, j));
  if (want_param_grads)
    for (int j = 0; j < dm; ++j) g.d_w_c[j] = dpred * tr.hq[j];

  // attention row: da[i] = <dz, hv_i>
  Vec da(n);
  for (int i = 0; i < n; ++i) da[i] = linalg::dot(dz.data(), tr.hv.row(i), dm);

  const double* a_q = tr.attn.row(q);

  // value path: dHV = a_q (x) dz
  if (want_param_grads) {
    Vec hta(dm, 0.0);  // H^T a_q
    for (int i = 0; i < n; ++i) linalg::axpy(hta.data(), a_q[i], tr.h.row(i), dm);
    linalg::outer_acc(g.d_w_v, hta.data(), dz.data());
  }
  Mat dh(n, dm);
  {
    Vec wv_dz = linalg::matvec(params.w_v, dz);  // (dHV W_V^T) rows share this vector
    for (int i = 0; i < n; ++i) linalg::axpy(dh.row(i), a_q[i], wv_dz.data(), dm);
  }

  // softmax row backward: ds = a (.) (da - <a, da>), then the 1/sqrt(dm) scale
  Vec ds(n);
  {
    double inner = linalg::dot(a_q, da.data(), n);
    for (int i = 0; i < n; ++i) ds[i] = a_q[i] * (da[i] - inner) * inv_sqrt_dm;
  }

  if (params.pe_mode == PEMode::rope) {
    // dQrot row q = K_rot^T ds ; dKrot = ds (x) q_rot[q]
    Vec dq(dm, 0.0);
    for (int i = 0; i < n; ++i) linalg::axpy(dq.data(), ds[i], tr.k_rot.row(i), dm);
    model::rope_rotate_row(dq.data(), dm, q, -1);  // undo the query-position rotation
    Mat dk(n, dm);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dm; ++j) dk(i, j) = ds[i] * tr.q_rot(q, j);
    model::apply_rope_rows(dk, -1);

    if (want_param_grads) {
      linalg::outer_acc(g.d_w_q, tr.h.row(q), dq.data());  // h_q (x) dq
      g.d_w_k = linalg::matmul_at(tr.h, dk);
    }
    // dh += dq W_q^T at row q ; dh += dk W_k^T
    Vec wq_dq = linalg::matvec(params.w_q, dq);
    linalg::axpy(dh.row(q), 1.0, wq_dq.data(), dm);
    Mat dk_wkt = linalg::matmul_bt(dk, params.w_k);
    add_mat(dh, dk_wkt);
  } else {
    // dM = e_q (x) ds with M = H Wqk H^T:
    //   dWqk += h_q (x) (ds H);  dh[q] += Wqk (ds H);  dh[i] += ds[i] * hw_q
    Vec v(dm, 0.0);  // ds H
    for (int i = 0; i < n; ++i) linalg::axpy(v.data(), ds[i], tr.h.row(i), dm);
    if (want_param_grads) linalg::outer_acc(g.d_w_qk, tr.h.row(q), v.data());
    Vec wqk_v = linalg::matvec(params.w_qk, v);
    linalg::axpy(dh.row(q), 1.0, wqk_v.data(), dm);
    const double* hw_q = tr.hw.row(q);
    for (int i = 0; i < n; ++i) linalg::axpy(dh.row(i), ds[i], hw_q, dm);
  }

  if (want_param_grads) {
    if (params.pe_mode == PEMode::trainable) {
      for (int i = 0; i < n; ++i) linalg::axpy(g.d_p.row(i), 1.0, dh.row(i), dm);
    }
    linalg::matmul_at_acc(g.d_w_in, x, dh);
  }
  if (want_input_grad) g.d_x = linalg::matmul_bt(dh, params.w_in);
  return g;
}

GradBundle backward(const ModelParams& params, const Mat& x, double y_q,
                    bool want_param_grads, bool want_input_grad) {
  return backward_core(params, x, y_q, want_param_grads, want_input_grad, SeedKind::loss);
}

Mat prediction_input_grad(const ModelParams& params, const Mat& x) {
  return backward_core(params, x, 0.0, false, true, SeedKind::prediction).d_x;
}

std::vector<std::span<double>> trainable_spans(ModelParams& p) {
  std::vector<std::span<double>> out;
  out.emplace_back(p.w_in.data);
  if (p.pe_mode == PEMode::rope) {
    out.emplace_back(p.w_q.data);
    out.emplace_back(p.w_k.data);
  } else {
    out.emplace_back(p.w_qk.data);
  }
  out.emplace_back(p.w_v.data);
  out.emplace_back(p.w_c);
  if (p.pe_mode == PEMode::trainable) out.emplace_back(p.p.data);
  return out;
}

std::vector<std::span<const double>> grad_spans(const GradBundle& g, PEMode mode) {
  std::vector<std::span<const double>> out;
  out.emplace_back(g.d_w_in.data);
  if (mode == PEMode::rope) {
    out.emplace_back(g.d_w_q.data);
    out.emplace_back(g.d_w_k.data);
  } else {
    out.emplace_back(g.d_w_qk.data);
  }
  out.emplace_back(g.d_w_v.data);
  out.emplace_back(g.d_w_c);
  if (mode == PEMode::trainable) out.emplace_back(g.d_p.data);
  return out;
}

namespace {
struct ProbeResult {
  double loss;
  double min_abs_pre;
};

ProbeResult probe(const ModelParams& params, const Mat& x, double y_q) {
  model::ForwardTrace tr;
  double pred = model::forward(params, x, &tr);
  double diff = pred - y_q;
  double min_abs = std::numeric_limits<double>::infinity();
  for (double z : tr.pre.data) min_abs = std::min(min_abs, std::abs(z));
  return {diff * diff, min_abs};
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}
}  // namespace

double fd_check(const ModelParams& params, const Mat& x, double y_q, double h) {
  if (h <= 0.0) throw std::invalid_argument("fd_check: h must be positive");
  GradBundle g = backward(params, x, y_q, true, true);
  const bool relu = params.act == Activation::relu;
  double worst = 0.0;

  auto check_coord = [&](double fd_plus_loss, double fd_minus_loss, double min_abs,
                         double analytic) {
    if (relu && min_abs < 10.0 * h) return;  // kink too close for central differences
    double fd = (fd_plus_loss - fd_minus_loss) / (2.0 * h);
    worst = std::max(worst, rel_err(fd, analytic));
  };

  // parameter coordinates
  ModelParams work = params;
  auto spans = trainable_spans(work);
  auto gsp = grad_spans(g, params.pe_mode);
  for (size_t ti = 0; ti < spans.size(); ++ti) {
    for (size_t k = 0; k < spans[ti].size(); ++k) {
      double orig = spans[ti][k];
      spans[ti][k] = orig + h;
      ProbeResult plus = probe(work, x, y_q);
      spans[ti][k] = orig - h;
      ProbeResult minus = probe(work, x, y_q);
      spans[ti][k] = orig;
      check_coord(plus.loss, minus.loss, std::min(plus.min_abs_pre, minus.min_abs_pre),
                  gsp[ti][k]);
    }
  }

  // input coordinates
  Mat xw = x;
  for (size_t k = 0; k < xw.data.size(); ++k) {
    double orig = xw.data[k];
    xw.data[k] = orig + h;
    ProbeResult plus = probe(params, xw, y_q);
    xw.data[k] = orig - h;
    ProbeResult minus = probe(params, xw, y_q);
    xw.data[k] = orig;
    check_coord(plus.loss, minus.loss, std::min(plus.min_abs_pre, minus.min_abs_pre),
                g.d_x.data[k]);
  }
  return worst;
}

}  // namespace icl::grad
