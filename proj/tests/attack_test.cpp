#include <doctest.h>

#include <cmath>

#include "icl/analysis.hpp"
#include "icl/attack.hpp"
#include "icl/theory.hpp"

using namespace icl;
using attack::AttackSpec;
using attack::PromptModel;
using datagen::Prompt;
using linalg::Mat;
using linalg::Vec;

namespace {

// f(X) = w . x_q: the closed-form attack moves the query along w.
PromptModel linear_stub(const Vec& w) {
  PromptModel pm;
  const int d = static_cast<int>(w.size());
  pm.predict = [w, d](const Mat& x) { return linalg::dot(w.data(), x.row(x.rows - 1), d); };
  pm.predict_grad = [w, d](const Mat& x) {
    Mat g(x.rows, x.cols);
    for (int j = 0; j < d; ++j) g(x.rows - 1, j) = w[j];
    return g;
  };
  pm.loss_grad = [pm](const Mat& x, double y) {
    double f = pm.predict(x);
    attack::LossGrad lg;
    lg.loss = (f - y) * (f - y);
    lg.d_x = pm.predict_grad(x);
    for (double& v : lg.d_x.data) v *= 2.0 * (f - y);
    return lg;
  };
  return pm;
}

std::vector<Prompt> random_prompts(uint64_t seed, int n, int t, int d) {
  rng::Rng r(seed);
  std::vector<Prompt> out;
  for (int i = 0; i < n; ++i) {
    datagen::Task task = datagen::sample_task(r, d);
    out.push_back(datagen::sample_prompt(r, task, t, d, datagen::InputDist::standard_gaussian));
  }
  return out;
}

}  // namespace

TEST_CASE("pgd with zero budget returns the input bit-exactly") {
  auto prompts = random_prompts(1, 1, 6, 3);
  rng::Rng r(2);
  model::ModelParams p = model::init_params(r, 3, 8, 6, model::PEMode::none, 0.0);
  PromptModel pm = attack::wrap_model(p);
  AttackSpec spec = AttackSpec::l2(0.0);
  Mat xa = attack::pgd(pm, prompts[0].x, prompts[0].query_label, spec);
  CHECK(xa.data == prompts[0].x.data);
}

TEST_CASE("one-step linear attack matches the closed form") {
  Vec w{0.8, -0.4, 0.3};
  PromptModel pm = linear_stub(w);
  auto prompts = random_prompts(3, 5, 6, 3);
  const double eps = 0.25;
  AttackSpec spec;
  spec.eps = eps;
  spec.iters = 1;
  spec.alpha = eps;
  for (const Prompt& pr : prompts) {
    double f0 = pm.predict(pr.x);
    double sgn = (f0 - pr.query_label) >= 0 ? 1.0 : -1.0;
    double wn = linalg::norm2(w);
    Mat expect = pr.x;
    for (int j = 0; j < 3; ++j) expect(6, j) += eps * sgn * w[j] / wn;
    Mat got = attack::pgd(pm, pr.x, pr.query_label, spec);
    for (size_t k = 0; k < got.data.size(); ++k)
      CHECK(got.data[k] == doctest::Approx(expect.data[k]).epsilon(1e-8));
  }
}

TEST_CASE("attacked loss never drops below the clean loss") {
  auto prompts = random_prompts(4, 20, 8, 4);
  rng::Rng r(5);
  model::ModelParams p = model::init_params(r, 4, 16, 8, model::PEMode::trainable, 1.0);
  PromptModel pm = attack::wrap_model(p);
  AttackSpec spec = AttackSpec::l2(0.3);
  for (const Prompt& pr : prompts) {
    Mat xa = attack::pgd(pm, pr.x, pr.query_label, spec);
    double clean = pm.predict(pr.x) - pr.query_label;
    double adv = pm.predict(xa) - pr.query_label;
    CHECK(adv * adv >= clean * clean);
  }
}

TEST_CASE("pgd honors budget and mask on every output") {
  auto prompts = random_prompts(6, 25, 7, 3);
  rng::Rng r(7);
  model::ModelParams p = model::init_params(r, 3, 16, 7, model::PEMode::none, 0.0);
  PromptModel pm = attack::wrap_model(p);
  for (double eps : {0.05, 0.3}) {
    AttackSpec spec = AttackSpec::l2(eps);
    for (const Prompt& pr : prompts) {
      Mat xa = attack::pgd(pm, pr.x, pr.query_label, spec);
      Mat diff = xa;
      for (size_t k = 0; k < diff.data.size(); ++k) diff.data[k] -= pr.x.data[k];
      CHECK(linalg::frobenius_norm(diff) <= eps + 1e-9);
      for (int i = 0; i < xa.rows; ++i) CHECK(xa(i, 3) == pr.x(i, 3));  // label column untouched
      CHECK(attack::gram_perturbation(pr.x, xa) <=
            theory::delta_cov_bound(eps, 7, 3) + 1e-9);
    }
  }
}

TEST_CASE("frozen query row stays bit-identical") {
  auto prompts = random_prompts(8, 5, 7, 3);
  rng::Rng r(9);
  model::ModelParams p = model::init_params(r, 3, 16, 7, model::PEMode::none, 0.0);
  PromptModel pm = attack::wrap_model(p);
  AttackSpec spec = AttackSpec::l2(0.3);
  spec.perturb_query = false;
  for (const Prompt& pr : prompts) {
    Mat xa = attack::pgd(pm, pr.x, pr.query_label, spec);
    for (int j = 0; j < 4; ++j) CHECK(xa(7, j) == pr.x(7, j));
  }
}

TEST_CASE("adversarial risk: zero budget equals clean risk; monotone for the linear stub") {
  Vec w{0.5, 0.1, -0.9};
  PromptModel pm = linear_stub(w);
  auto prompts = random_prompts(10, 40, 6, 3);

  double clean = analysis::risk(pm.predict, prompts);
  CHECK(attack::adversarial_risk(pm, prompts, AttackSpec::l2(0.0)) == clean);

  double r1 = attack::adversarial_risk(pm, prompts, AttackSpec::l2(0.1));
  double r2 = attack::adversarial_risk(pm, prompts, AttackSpec::l2(0.2));
  CHECK(r1 >= clean);
  CHECK(r2 >= r1 - 1e-9);

  // single prompt: the mean is that prompt's pgd loss
  std::vector<Prompt> one{prompts[0]};
  AttackSpec spec = AttackSpec::l2(0.1);
  Mat xa = attack::pgd(pm, one[0].x, one[0].query_label, spec);
  double diff = pm.predict(xa) - one[0].query_label;
  CHECK(attack::adversarial_risk(pm, one, spec) == diff * diff);
}

TEST_CASE("surrogate loss dominates the attacked loss for the linear stub") {
  Vec w{0.7, -0.2, 0.4};
  PromptModel pm = linear_stub(w);
  auto prompts = random_prompts(11, 30, 6, 3);
  AttackSpec spec = AttackSpec::l2(0.2);
  double l_x = analysis::lipschitz_est(pm, prompts);  // safety factor 2 by default
  CHECK(l_x == doctest::Approx(2.0 * linalg::norm2(w)).epsilon(1e-12));
  for (const Prompt& pr : prompts) {
    Mat xa = attack::pgd(pm, pr.x, pr.query_label, spec);
    double adv = pm.predict(xa) - pr.query_label;
    double clean = std::abs(pm.predict(pr.x) - pr.query_label);
    double surrogate = (clean + l_x * spec.eps) * (clean + l_x * spec.eps);
    CHECK(adv * adv <= surrogate + 1e-9);
  }
}
