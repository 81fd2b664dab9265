#include "icl/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "icl/binio.hpp"

namespace icl::model {

namespace {
constexpr double kRopeBase = 10000.0;

constexpr char kMagic[8] = {'I', 'C', 'L', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

// Per-tensor init streams.
constexpr uint64_t kStreamWin = 0;
constexpr uint64_t kStreamWqk = 1;
constexpr uint64_t kStreamWk = 2;
constexpr uint64_t kStreamWv = 3;
constexpr uint64_t kStreamWc = 4;

void fill_gaussian(linalg::Mat& m, rng::Rng rng, double sd) {
  for (double& v : m.data) v = sd * rng.gaussian();
}
}  // namespace

std::string to_string(PEMode m) {
  switch (m) {
    case PEMode::none: return "none";
    case PEMode::trainable: return "trainable";
    case PEMode::rope: return "rope";
  }
  return "?";
}

PEMode pe_mode_from_string(const std::string& s) {
  if (s == "none" || s == "nope") return PEMode::none;
  if (s == "trainable" || s == "pe") return PEMode::trainable;
  if (s == "rope") return PEMode::rope;
  throw std::invalid_argument("unknown pe mode: " + s);
}

double activation(Activation a, double z) {
  return a == Activation::relu ? (z > 0.0 ? z : 0.0) : z;
}

double activation_grad(Activation a, double z) {
  // ReLU subgradient at exactly 0 is taken as 0.
  return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0;
}

linalg::Mat sinusoidal_table(int rows, int d_m) {
  linalg::Mat table(rows, d_m);
  for (int pos = 0; pos < rows; ++pos) {
    double* row = table.row(pos);
    for (int u = 0; 2 * u < d_m; ++u) {
      double theta = std::pow(kRopeBase, -2.0 * u / d_m);
      row[2 * u] = std::sin(pos * theta);
      if (2 * u + 1 < d_m) row[2 * u + 1] = std::cos(pos * theta);
    }
  }
  return table;
}

ModelParams init_params(rng::Rng& r, int d, int d_m, int t, PEMode mode,
                        double pe_init_scale, Activation act) {
  if (d_m < 1 || t < 1 || d < 1) throw std::invalid_argument("init_params: bad dimensions");
  ModelParams p;
  p.d = d;
  p.d_m = d_m;
  p.t_max = t;
  p.pe_mode = mode;
  p.act = act;

  p.w_in = linalg::Mat(d + 1, d_m);
  fill_gaussian(p.w_in, r.fork(kStreamWin), 1.0 / std::sqrt(d + 1.0));
  const double sd_m = 1.0 / std::sqrt(static_cast<double>(d_m));
  if (mode == PEMode::rope) {
    p.w_q = linalg::Mat(d_m, d_m);
    p.w_k = linalg::Mat(d_m, d_m);
    fill_gaussian(p.w_q, r.fork(kStreamWqk), sd_m);
    fill_gaussian(p.w_k, r.fork(kStreamWk), sd_m);
  } else {
    p.w_qk = linalg::Mat(d_m, d_m);
    fill_gaussian(p.w_qk, r.fork(kStreamWqk), sd_m);
  }
  p.w_v = linalg::Mat(d_m, d_m);
  fill_gaussian(p.w_v, r.fork(kStreamWv), sd_m);
  rng::Rng wc_rng = r.fork(kStreamWc);
  p.w_c.resize(d_m);
  for (double& v : p.w_c) v = sd_m * wc_rng.gaussian();

  if (mode == PEMode::trainable) {
    p.p = sinusoidal_table(t + 1, d_m);
    for (double& v : p.p.data) v *= pe_init_scale;
  }
  return p;
}

void rope_rotate_row(double* row, int d_m, int pos, int sign) {
  if (d_m % 2 != 0) throw std::invalid_argument("rope: d_m must be even");
  for (int u = 0; 2 * u < d_m; ++u) {
    double theta = std::pow(kRopeBase, -2.0 * u / d_m);
    double angle = sign * pos * theta;
    double c = std::cos(angle), s = std::sin(angle);
    double a = row[2 * u], b = row[2 * u + 1];
    row[2 * u] = c * a - s * b;
    row[2 * u + 1] = s * a + c * b;
  }
}

void apply_rope_rows(linalg::Mat& m, int sign) {
  for (int pos = 0; pos < m.rows; ++pos) rope_rotate_row(m.row(pos), m.cols, pos, sign);
}

linalg::Mat rope_score(const ModelParams& params, const linalg::Mat& h,
                       linalg::Mat* q_rot_out, linalg::Mat* k_rot_out) {
  if (params.pe_mode != PEMode::rope) throw std::invalid_argument("rope_score: not a rope model");
  if (params.d_m % 2 != 0) throw std::invalid_argument("rope_score: d_m must be even");
  linalg::Mat q = linalg::matmul(h, params.w_q);
  linalg::Mat k = linalg::matmul(h, params.w_k);
  apply_rope_rows(q, +1);
  apply_rope_rows(k, +1);
  linalg::Mat scores = linalg::matmul_bt(q, k);
  const double inv = 1.0 / std::sqrt(static_cast<double>(params.d_m));
  for (double& v : scores.data) v *= inv;
  if (q_rot_out) *q_rot_out = std::move(q);
  if (k_rot_out) *k_rot_out = std::move(k);
  return scores;
}

double forward(const ModelParams& params, const linalg::Mat& x, ForwardTrace* trace) {
  const int n = x.rows;
  if (x.cols != params.d + 1) throw std::invalid_argument("forward: input width mismatch");
  if (n > params.t_max + 1) throw std::invalid_argument("forward: prompt longer than t_max");

  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;

  tr.h = linalg::matmul(x, params.w_in);
  if (params.pe_mode == PEMode::trainable) {
    for (int i = 0; i < n; ++i) linalg::axpy(tr.h.row(i), 1.0, params.p.row(i), params.d_m);
  }

  if (params.pe_mode == PEMode::rope) {
    tr.scores = rope_score(params, tr.h, &tr.q_rot, &tr.k_rot);
  } else {
    tr.hw = linalg::matmul(tr.h, params.w_qk);
    tr.scores = linalg::matmul_bt(tr.hw, tr.h);
    const double inv = 1.0 / std::sqrt(static_cast<double>(params.d_m));
    for (double& v : tr.scores.data) v *= inv;
  }

  tr.attn = linalg::row_softmax(tr.scores);
  tr.hv = linalg::matmul(tr.h, params.w_v);
  tr.pre = linalg::matmul(tr.attn, tr.hv);
  tr.hprime = tr.pre;
  for (double& v : tr.hprime.data) v = activation(params.act, v);
  tr.hq.assign(tr.hprime.row(n - 1), tr.hprime.row(n - 1) + params.d_m);
  tr.prediction = linalg::dot(params.w_c.data(), tr.hq.data(), params.d_m);
  return tr.prediction;
}

ParamCount param_count(int d, int d_m, PEMode mode, int t) {
  ParamCount pc;
  pc.theory_d = static_cast<long long>(d) * d_m + static_cast<long long>(d_m) * d_m;
  long long dm = d_m;
  pc.actual = (d + 1LL) * dm + dm * dm /* value */ + dm /* readout */;
  pc.actual += (mode == PEMode::rope) ? 2 * dm * dm : dm * dm;  // score matrices
  if (mode == PEMode::trainable) pc.actual += (t + 1LL) * dm;
  return pc;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  binio::write_magic(os, kMagic);
  binio::write_u32(os, kVersion);
  binio::write_u32(os, static_cast<uint32_t>(params.pe_mode));
  binio::write_u32(os, static_cast<uint32_t>(params.act));
  binio::write_u32(os, static_cast<uint32_t>(params.d));
  binio::write_u32(os, static_cast<uint32_t>(params.d_m));
  binio::write_u32(os, static_cast<uint32_t>(params.t_max));
  binio::write_f64s(os, params.w_in.data);
  if (params.pe_mode == PEMode::rope) {
    binio::write_f64s(os, params.w_q.data);
    binio::write_f64s(os, params.w_k.data);
  } else {
    binio::write_f64s(os, params.w_qk.data);
  }
  binio::write_f64s(os, params.w_v.data);
  binio::write_f64s(os, params.w_c);
  if (params.pe_mode == PEMode::trainable) binio::write_f64s(os, params.p.data);
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  binio::expect_magic(is, kMagic, "checkpoint");
  uint32_t version = binio::read_u32(is);
  if (version != kVersion) throw std::runtime_error("load_checkpoint: unsupported version");
  ModelParams p;
  p.pe_mode = static_cast<PEMode>(binio::read_u32(is));
  p.act = static_cast<Activation>(binio::read_u32(is));
  p.d = static_cast<int>(binio::read_u32(is));
  p.d_m = static_cast<int>(binio::read_u32(is));
  p.t_max = static_cast<int>(binio::read_u32(is));
  p.w_in = linalg::Mat(p.d + 1, p.d_m);
  binio::read_f64s(is, p.w_in.data);
  if (p.pe_mode == PEMode::rope) {
    p.w_q = linalg::Mat(p.d_m, p.d_m);
    p.w_k = linalg::Mat(p.d_m, p.d_m);
    binio::read_f64s(is, p.w_q.data);
    binio::read_f64s(is, p.w_k.data);
  } else {
    p.w_qk = linalg::Mat(p.d_m, p.d_m);
    binio::read_f64s(is, p.w_qk.data);
  }
  p.w_v = linalg::Mat(p.d_m, p.d_m);
  binio::read_f64s(is, p.w_v.data);
  p.w_c.resize(p.d_m);
  binio::read_f64s(is, p.w_c);
  if (p.pe_mode == PEMode::trainable) {
    p.p = linalg::Mat(p.t_max + 1, p.d_m);
    binio::read_f64s(is, p.p.data);
  }
  return p;
}

}  // namespace icl::model
