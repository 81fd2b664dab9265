#include <doctest.h>

#include <cmath>

#include "icl/par.hpp"
#include "icl/train.hpp"

using namespace icl;
using datagen::Dataset;
using model::Activation;
using model::ModelParams;
using model::PEMode;
using train::AdamState;
using train::TrainConfig;

namespace {
grad::GradBundle const_grad_like(ModelParams& p, double g) {
  grad::GradBundle b;
  b.d_w_in = linalg::Mat(p.w_in.rows, p.w_in.cols, g);
  b.d_w_qk = linalg::Mat(p.w_qk.rows, p.w_qk.cols, g);
  b.d_w_v = linalg::Mat(p.w_v.rows, p.w_v.cols, g);
  b.d_w_c.assign(p.w_c.size(), g);
  return b;
}
}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  rng::Rng r(1);
  ModelParams p = model::init_params(r, 3, 8, 6, PEMode::none, 0.0);
  ModelParams before = p;
  AdamState st = train::make_adam_state(p);
  TrainConfig cfg;
  adam_step(p, const_grad_like(p, 0.0), st, cfg);
  CHECK(st.step == 1);
  CHECK(p.w_in.data == before.w_in.data);
  CHECK(p.w_qk.data == before.w_qk.data);
  CHECK(p.w_c == before.w_c);
}

TEST_CASE("adam: constant gradient drives unit-lr-magnitude steps") {
  rng::Rng r(2);
  ModelParams p = model::init_params(r, 3, 8, 6, PEMode::none, 0.0);
  AdamState st = train::make_adam_state(p);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  double prev = p.w_c[0];
  double last_update = 0.0;
  for (int step = 0; step < 500; ++step) {
    adam_step(p, const_grad_like(p, 0.37), st, cfg);
    last_update = p.w_c[0] - prev;
    prev = p.w_c[0];
  }
  CHECK(std::abs(last_update) == doctest::Approx(cfg.lr).epsilon(0.01));
}

TEST_CASE("training runs are bit-identical and epochs=0 is the identity") {
  Dataset ds = datagen::build_dataset(3, 20, 2, 6, 3, datagen::InputDist::standard_gaussian);
  rng::Rng r(3);
  ModelParams init = model::init_params(r, 3, 8, 6, PEMode::trainable, 1.0);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 50;

  train::TrainResult a = train::run_training(ds.train_prompts, init, cfg);
  train::TrainResult b = train::run_training(ds.train_prompts, init, cfg);
  CHECK(a.loss_curve == b.loss_curve);
  CHECK(a.params.w_qk.data == b.params.w_qk.data);
  CHECK(a.params.p.data == b.params.p.data);

  cfg.epochs = 0;
  train::TrainResult c = train::run_training(ds.train_prompts, init, cfg);
  CHECK(c.loss_curve.empty());
  CHECK(c.params.w_in.data == init.w_in.data);
}

TEST_CASE("training is bit-identical across thread counts") {
  Dataset ds = datagen::build_dataset(4, 16, 2, 6, 3, datagen::InputDist::standard_gaussian);
  rng::Rng r(4);
  ModelParams init = model::init_params(r, 3, 8, 6, PEMode::none, 0.0);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 30;

  par::set_threads(1);
  train::TrainResult a = train::run_training(ds.train_prompts, init, cfg);
  par::set_threads(3);
  train::TrainResult b = train::run_training(ds.train_prompts, init, cfg);
  par::set_threads(1);
  CHECK(a.loss_curve == b.loss_curve);
  CHECK(a.params.w_qk.data == b.params.w_qk.data);
}

TEST_CASE("batch_grad agrees with the serial reference") {
  Dataset ds = datagen::build_dataset(5, 33, 2, 6, 3, datagen::InputDist::standard_gaussian);
  rng::Rng r(5);
  ModelParams p = model::init_params(r, 3, 8, 6, PEMode::none, 0.0);
  grad::GradBundle tree = train::batch_grad(p, ds.train_prompts);
  grad::GradBundle serial = train::batch_grad_serial(p, ds.train_prompts);
  CHECK(tree.loss == doctest::Approx(serial.loss).epsilon(1e-13));
  for (size_t i = 0; i < tree.d_w_qk.data.size(); ++i)
    CHECK(tree.d_w_qk.data[i] == doctest::Approx(serial.d_w_qk.data[i]).epsilon(1e-11));
  CHECK(train::mean_query_loss(p, ds.train_prompts) ==
        doctest::Approx(train::mean_query_loss_serial(p, ds.train_prompts)).epsilon(1e-13));
}

TEST_CASE("identity-activation toy halves its loss") {
  Dataset ds = datagen::build_dataset(6, 32, 2, 6, 1, datagen::InputDist::standard_gaussian);
  rng::Rng r(6);
  ModelParams init = model::init_params(r, 1, 2, 6, PEMode::none, 0.0, Activation::identity);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 1500;
  train::TrainResult res = train::run_training(ds.train_prompts, init, cfg);
  CHECK(res.loss_curve.back() < 0.5 * res.loss_curve.front());
}

TEST_CASE("final train risk equals the last curve entry exactly") {
  Dataset ds = datagen::build_dataset(7, 24, 2, 6, 3, datagen::InputDist::standard_gaussian);
  rng::Rng r(7);
  ModelParams init = model::init_params(r, 3, 8, 6, PEMode::none, 0.0);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 40;
  train::TrainResult res = train::run_training(ds.train_prompts, init, cfg);
  CHECK(train::mean_query_loss(res.params, ds.train_prompts) == res.loss_curve.back());
}

TEST_CASE("non-finite loss aborts with a diagnostic") {
  Dataset ds = datagen::build_dataset(8, 8, 2, 6, 3, datagen::InputDist::standard_gaussian);
  rng::Rng r(8);
  ModelParams init = model::init_params(r, 3, 8, 6, PEMode::none, 0.0);
  init.w_c[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.epochs = 3;
  CHECK_THROWS_AS((void)train::run_training(ds.train_prompts, init, cfg), std::runtime_error);
}
