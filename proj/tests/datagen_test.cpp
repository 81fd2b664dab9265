#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "icl/datagen.hpp"
#include "icl/linalg.hpp"
#include "icl/theory.hpp"

using namespace icl;
using datagen::Dataset;
using datagen::InputDist;
using datagen::Prompt;
using datagen::Task;
using linalg::Mat;

TEST_CASE("sample_task determinism and moments") {
  rng::Rng a(3), b(3);
  Task t1 = datagen::sample_task(a, 5);
  Task t2 = datagen::sample_task(b, 5);
  CHECK(t1.mu == t2.mu);

  {  // d=1: sample variance of mu_1 near 1
    rng::Rng r(100);
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double m = datagen::sample_task(r, 1).mu[0];
      sum += m;
      sum2 += m * m;
    }
    double var = sum2 / n - (sum / n) * (sum / n);
    CHECK(var > 0.97);
    CHECK(var < 1.03);
  }
  {  // d=5: mean squared norm near 1
    rng::Rng r(101);
    const int n = 100000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      Task t = datagen::sample_task(r, 5);
      acc += linalg::dot(t.mu.data(), t.mu.data(), 5);
    }
    CHECK(acc / n > 0.97);
    CHECK(acc / n < 1.03);
  }
}

TEST_CASE("sample_prompt structure") {
  rng::Rng r(9);
  Task task = datagen::sample_task(r, 4);
  Prompt p = datagen::sample_prompt(r, task, 7, 4, InputDist::standard_gaussian);
  CHECK(p.x.rows == 8);
  CHECK(p.x.cols == 5);
  CHECK(p.x(7, 4) == 0.0);  // query label slot
  for (int i = 0; i < 7; ++i) {
    double y = linalg::dot(task.mu.data(), p.x.row(i), 4);
    CHECK(p.x(i, 4) == y);  // bit-exact by construction
  }
  CHECK(p.query_label == linalg::dot(task.mu.data(), p.x.row(7), 4));

  Prompt pr = datagen::sample_prompt(r, task, 5, 4, InputDist::rademacher);
  for (int i = 0; i <= 5; ++i)
    for (int j = 0; j < 4; ++j) CHECK(std::abs(pr.x(i, j)) == 1.0);
}

TEST_CASE("build_dataset counts, determinism, seed sensitivity") {
  Dataset ds = datagen::build_dataset(1, 309, 9991, 10, 5, InputDist::standard_gaussian);
  CHECK(ds.train_prompts.size() == 309);
  CHECK(ds.val_tasks.size() == 9991);

  Dataset ds2 = datagen::build_dataset(1, 309, 9991, 10, 5, InputDist::standard_gaussian);
  CHECK(ds.train_prompts[0].x.data == ds2.train_prompts[0].x.data);
  CHECK(ds.train_prompts[308].query_label == ds2.train_prompts[308].query_label);
  CHECK(ds.val_tasks[9990].mu == ds2.val_tasks[9990].mu);

  Dataset ds3 = datagen::build_dataset(2, 309, 9991, 10, 5, InputDist::standard_gaussian);
  CHECK(ds.train_prompts[0].task.mu != ds3.train_prompts[0].task.mu);
}

TEST_CASE("growing the validation split leaves training draws untouched") {
  Dataset small = datagen::build_dataset(4, 20, 10, 8, 5, InputDist::standard_gaussian);
  Dataset big = datagen::build_dataset(4, 20, 500, 8, 5, InputDist::standard_gaussian);
  for (int i = 0; i < 20; ++i)
    CHECK(small.train_prompts[i].x.data == big.train_prompts[i].x.data);
  for (int j = 0; j < 10; ++j) CHECK(small.val_tasks[j].mu == big.val_tasks[j].mu);
}

TEST_CASE("input distributions have identity covariance") {
  const int n = 100000, d = 5;
  for (InputDist dist :
       {InputDist::standard_gaussian, InputDist::rademacher, InputDist::uniform_unit_cov}) {
    rng::Rng r(200 + static_cast<int>(dist));
    Mat cov(d, d);
    linalg::Vec mean(d, 0.0);
    linalg::Vec x(d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) x[j] = datagen::sample_input_entry(r, dist);
      for (int a = 0; a < d; ++a) {
        mean[a] += x[a];
        for (int b = 0; b < d; ++b) cov(a, b) += x[a] * x[b];
      }
    }
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) cov(a, b) = cov(a, b) / n - (a == b ? 1.0 : 0.0);
    CHECK(linalg::spectral_norm(cov) < 0.05);
    CHECK(std::abs(mean[0] / n) < 0.02);
  }
}

TEST_CASE("gram matrices concentrate at the sqrt(d/t) rate") {
  const int d = 5, trials = 200;
  auto median_gram_dev = [&](int t, uint64_t seed) {
    std::vector<double> devs;
    rng::Rng root(seed);
    for (int trial = 0; trial < trials; ++trial) {
      rng::Rng r = root.fork(trial);
      Mat g(d, d);
      linalg::Vec x(d);
      for (int i = 0; i < t; ++i) {
        for (int j = 0; j < d; ++j) x[j] = r.gaussian();
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) g(a, b) += x[a] * x[b];
      }
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) g(a, b) = g(a, b) / t - (a == b ? 1.0 : 0.0);
      devs.push_back(linalg::spectral_norm(g));
    }
    std::sort(devs.begin(), devs.end());
    return devs[trials / 2];
  };
  double m125 = median_gram_dev(125, 77);
  double m500 = median_gram_dev(500, 78);
  // factor-2 check with slack: quadrupling t should halve the median
  // deviation to within 10% either way (the exact ratio sits at ~0.504)
  CHECK(m500 < 0.5 * 1.1 * m125);
  CHECK(m500 > 0.5 * 0.8 * m125);
}

TEST_CASE("high-probability response bound") {
  const double m_y = theory::m_y_bound(2.0, 0.01);
  rng::Rng r(55);
  const int n = 100000, d = 5;
  int exceed = 0;
  for (int i = 0; i < n; ++i) {
    Task task = datagen::sample_task(r, d);
    Prompt p = datagen::sample_prompt(r, task, 1, d, InputDist::standard_gaussian);
    if (std::abs(p.query_label) > m_y) ++exceed;
  }
  CHECK(static_cast<double>(exceed) / n <= 0.02);
}

TEST_CASE("dataset binary round trip is bit-identical") {
  Dataset ds = datagen::build_dataset(11, 13, 17, 6, 3, InputDist::uniform_unit_cov);
  std::string path = "test_dataset_roundtrip.bin";
  datagen::save_dataset(ds, path);
  Dataset back = datagen::load_dataset(path);
  CHECK(back.t == ds.t);
  CHECK(back.d == ds.d);
  CHECK(back.seed == ds.seed);
  CHECK(back.dist == ds.dist);
  REQUIRE(back.train_prompts.size() == ds.train_prompts.size());
  for (size_t i = 0; i < ds.train_prompts.size(); ++i) {
    CHECK(back.train_prompts[i].x.data == ds.train_prompts[i].x.data);
    CHECK(back.train_prompts[i].task.mu == ds.train_prompts[i].task.mu);
    CHECK(back.train_prompts[i].query_label == ds.train_prompts[i].query_label);
  }
  for (size_t j = 0; j < ds.val_tasks.size(); ++j)
    CHECK(back.val_tasks[j].mu == ds.val_tasks[j].mu);
  std::remove(path.c_str());
}

TEST_CASE("val prompts are reproducible per evaluation seed") {
  Dataset ds = datagen::build_dataset(3, 5, 8, 6, 4, InputDist::standard_gaussian);
  auto a = datagen::sample_val_prompts(ds, 99);
  auto b = datagen::sample_val_prompts(ds, 99);
  auto c = datagen::sample_val_prompts(ds, 100);
  REQUIRE(a.size() == 8);
  CHECK(a[3].x.data == b[3].x.data);
  CHECK(a[3].x.data != c[3].x.data);
  // same tasks either way
  CHECK(a[3].task.mu == c[3].task.mu);
}
