#include <doctest.h>

#include <cmath>

#include "icl/datagen.hpp"
#include "icl/grad.hpp"

using namespace icl;
using grad::GradBundle;
using linalg::Mat;
using model::Activation;
using model::ModelParams;
using model::PEMode;

namespace {
datagen::Prompt random_prompt(rng::Rng& r, int t, int d) {
  datagen::Task task = datagen::sample_task(r, d);
  return datagen::sample_prompt(r, task, t, d, datagen::InputDist::standard_gaussian);
}
}  // namespace

TEST_CASE("readout gradient is 2(pred - y) * h'_q exactly") {
  rng::Rng r(1);
  ModelParams p = model::init_params(r, 3, 8, 6, PEMode::none, 0.0);
  datagen::Prompt prompt = random_prompt(r, 6, 3);
  model::ForwardTrace tr;
  double pred = model::forward(p, prompt.x, &tr);
  GradBundle g = grad::backward(p, prompt.x, prompt.query_label);
  for (int j = 0; j < 8; ++j)
    CHECK(g.d_w_c[j] == 2.0 * (pred - prompt.query_label) * tr.hq[j]);
}

TEST_CASE("zero residual kills every gradient") {
  rng::Rng r(2);
  ModelParams p = model::init_params(r, 3, 8, 6, PEMode::trainable, 2.0);
  datagen::Prompt prompt = random_prompt(r, 6, 3);
  double pred = model::forward(p, prompt.x);
  GradBundle g = grad::backward(p, prompt.x, pred);  // y_q set to the prediction
  CHECK(g.loss == 0.0);
  for (double v : g.d_w_in.data) CHECK(v == 0.0);
  for (double v : g.d_w_qk.data) CHECK(v == 0.0);
  for (double v : g.d_w_v.data) CHECK(v == 0.0);
  for (double v : g.d_w_c) CHECK(v == 0.0);
  for (double v : g.d_p.data) CHECK(v == 0.0);
  for (double v : g.d_x.data) CHECK(v == 0.0);
}

TEST_CASE("finite differences confirm every gradient coordinate") {
  // 20 random draws at d=3, d_m=8, t=6 per activation, modes cycled
  const double h = 1e-5;
  for (Activation act : {Activation::relu, Activation::identity}) {
    double worst = 0.0;
    rng::Rng r(act == Activation::relu ? 10 : 11);
    for (int rep = 0; rep < 20; ++rep) {
      PEMode mode = rep % 3 == 0   ? PEMode::none
                    : rep % 3 == 1 ? PEMode::trainable
                                   : PEMode::rope;
      ModelParams p = model::init_params(r, 3, 8, 6, mode, 1.5, act);
      datagen::Prompt prompt = random_prompt(r, 6, 3);
      worst = std::max(worst, grad::fd_check(p, prompt.x, prompt.query_label, h));
    }
    CHECK(worst < (act == Activation::relu ? 1e-5 : 1e-6));
  }
}

TEST_CASE("fd_check on the all-zero model returns zero error") {
  ModelParams p;
  p.d = 3;
  p.d_m = 8;
  p.t_max = 6;
  p.pe_mode = PEMode::none;
  p.act = Activation::relu;
  p.w_in = Mat(4, 8);
  p.w_qk = Mat(8, 8);
  p.w_v = Mat(8, 8);
  p.w_c.assign(8, 0.0);
  rng::Rng r(3);
  datagen::Prompt prompt = random_prompt(r, 6, 3);
  CHECK(grad::fd_check(p, prompt.x, prompt.query_label, 1e-5) == 0.0);
}

TEST_CASE("query-row label coordinate has a well-defined input gradient") {
  rng::Rng r(4);
  ModelParams p = model::init_params(r, 3, 8, 6, PEMode::none, 0.0);
  datagen::Prompt prompt = random_prompt(r, 6, 3);
  GradBundle g = grad::backward(p, prompt.x, prompt.query_label);
  CHECK(std::isfinite(g.d_x(6, 3)));
  CHECK(g.d_x.rows == 7);
  CHECK(g.d_x.cols == 4);
}

TEST_CASE("bundle addition is commutative to rounding") {
  rng::Rng r(5);
  ModelParams p = model::init_params(r, 3, 8, 6, PEMode::none, 0.0);
  datagen::Prompt a = random_prompt(r, 6, 3);
  datagen::Prompt b = random_prompt(r, 6, 3);
  GradBundle gb = grad::backward(p, b.x, b.query_label);
  GradBundle ga = grad::backward(p, a.x, a.query_label);
  GradBundle ab = grad::backward(p, a.x, a.query_label);
  ab.add(gb);
  GradBundle ba = grad::backward(p, b.x, b.query_label);
  ba.add(ga);
  for (size_t i = 0; i < ab.d_w_qk.data.size(); ++i)
    CHECK(ab.d_w_qk.data[i] == doctest::Approx(ba.d_w_qk.data[i]).epsilon(1e-12));
  CHECK(ab.loss == doctest::Approx(ba.loss).epsilon(1e-13));
}

TEST_CASE("prediction_input_grad matches the loss gradient scaling") {
  rng::Rng r(6);
  ModelParams p = model::init_params(r, 3, 8, 6, PEMode::none, 0.0);
  datagen::Prompt prompt = random_prompt(r, 6, 3);
  double y = prompt.query_label + 0.5;  // nonzero residual
  double pred = model::forward(p, prompt.x);
  GradBundle g = grad::backward(p, prompt.x, y);
  Mat pg = grad::prediction_input_grad(p, prompt.x);
  double scale = 2.0 * (pred - y);
  for (size_t k = 0; k < pg.data.size(); ++k)
    CHECK(g.d_x.data[k] == doctest::Approx(scale * pg.data[k]).epsilon(1e-12));
}
