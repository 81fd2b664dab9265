#pragma once

#include <cstdint>
#include <string>

#include "icl/linalg.hpp"
#include "icl/rng.hpp"

namespace icl::model {

enum class PEMode { none, trainable, rope };
enum class Activation { relu, identity };

std::string to_string(PEMode m);
PEMode pe_mode_from_string(const std::string& s);

/// Single-layer, single-head attention model. Modes none/trainable hold the
/// combined score matrix w_qk; mode rope keeps w_q/w_k separate because the
/// position rotations act between them.
struct ModelParams {
  int d = 0;      // input dimension (x lives in R^d, rows of X in R^{d+1})
  int d_m = 0;    // embedding dimension
  int t_max = 0;  // prompts carry t_max+1 rows
  PEMode pe_mode = PEMode::none;
  Activation act = Activation::relu;

  linalg::Mat w_in;        // (d+1) x d_m
  linalg::Mat w_qk;        // d_m x d_m   (none / trainable)
  linalg::Mat w_q, w_k;    // d_m x d_m   (rope)
  linalg::Mat w_v;         // d_m x d_m
  linalg::Vec w_c;         // d_m
  linalg::Mat p;           // (t_max+1) x d_m (trainable only)
};

/// Everything the forward pass produces, kept for backprop and inspection.
struct ForwardTrace {
  linalg::Mat h;        // embeddings, X w_in (+ P)
  linalg::Mat hw;       // h w_qk (cached for backward; empty in rope mode)
  linalg::Mat q_rot;    // rotated queries (rope only)
  linalg::Mat k_rot;    // rotated keys (rope only)
  linalg::Mat scores;   // pre-softmax attention scores
  linalg::Mat attn;     // row-softmax of scores
  linalg::Mat hv;       // h w_v
  linalg::Mat pre;      // attn * hv, pre-activation
  linalg::Mat hprime;   // activation(pre)
  linalg::Vec hq;       // last row of hprime
  double prediction = 0.0;
};

double activation(Activation a, double z);
double activation_grad(Activation a, double z);

/// Standard sinusoidal position table: row p, columns (2u, 2u+1) hold
/// sin(p * theta_u), cos(p * theta_u) with theta_u = 10000^(-2u/d_m).
linalg::Mat sinusoidal_table(int rows, int d_m);

/// w_in ~ N(0, 1/(d+1)); w_qk, w_q, w_k, w_v, w_c ~ N(0, 1/d_m); trainable
/// P = pe_init_scale * sinusoidal table. Each tensor draws from its own
/// child stream so modes sharing a seed share the common tensors.
ModelParams init_params(rng::Rng& r, int d, int d_m, int t, PEMode mode,
                        double pe_init_scale, Activation act = Activation::relu);

/// Scalar prediction for the query row; fills `trace` when given.
double forward(const ModelParams& params, const linalg::Mat& x, ForwardTrace* trace = nullptr);

/// Rotary scores: score[i][j] = <R_i q_i, R_j k_j> / sqrt(d_m) with
/// q = h w_q, k = h w_k. Requires even d_m.
linalg::Mat rope_score(const ModelParams& params, const linalg::Mat& h,
                       linalg::Mat* q_rot_out = nullptr, linalg::Mat* k_rot_out = nullptr);

/// Rotate row p of m by the position-p rotary rotation (sign=-1 undoes it).
void apply_rope_rows(linalg::Mat& m, int sign);
void rope_rotate_row(double* row, int d_m, int pos, int sign);

struct ParamCount {
  long long theory_d = 0;  // d*d_m + d_m^2
  long long actual = 0;    // trainable entries for the configured mode
};
ParamCount param_count(int d, int d_m, PEMode mode, int t);

void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace icl::model
