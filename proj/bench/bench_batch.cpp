// Times the batch kernels against their serial reference implementations:
// full-batch gradient, batch risk, and batch PGD. Run with --threads N to
// see the OpenMP scaling on multicore machines.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "icl/attack.hpp"
#include "icl/datagen.hpp"
#include "icl/model.hpp"
#include "icl/par.hpp"
#include "icl/train.hpp"

using Clock = std::chrono::steady_clock;

namespace {
double seconds_of(const std::function<void()>& fn, int reps) {
  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double>(Clock::now() - t0).count() / reps;
}
}  // namespace

int main(int argc, char** argv) {
  int threads = 0;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::strcmp(argv[i], "--threads") == 0) threads = std::atoi(argv[i + 1]);

  const int t = 20, d = 5, d_m = 64, n_prompts = 309;
  icl::datagen::Dataset ds = icl::datagen::build_dataset(1, n_prompts, 1, t, d,
                                                         icl::datagen::InputDist::standard_gaussian);
  icl::rng::Rng r(1);
  icl::model::ModelParams params =
      icl::model::init_params(r, d, d_m, t, icl::model::PEMode::none, 0.0);
  icl::attack::PromptModel pm = icl::attack::wrap_model(params);
  icl::attack::AttackSpec spec = icl::attack::AttackSpec::l2(0.2, 10);
  std::vector<icl::datagen::Prompt> attack_set(ds.train_prompts.begin(),
                                               ds.train_prompts.begin() + 64);

  std::printf("batch kernels: %d prompts, t=%d, d=%d, d_m=%d\n", n_prompts, t, d, d_m);

  icl::par::set_threads(1);
  double grad_serial = seconds_of([&] { icl::train::batch_grad_serial(params, ds.train_prompts); }, 5);
  double risk_serial = seconds_of([&] { icl::train::mean_query_loss_serial(params, ds.train_prompts); }, 20);
  double pgd_serial = seconds_of([&] { icl::attack::adversarial_risk(pm, attack_set, spec); }, 2);

  if (threads > 0) icl::par::set_threads(threads);
  int used = icl::par::threads();
  double grad_par = seconds_of([&] { icl::train::batch_grad(params, ds.train_prompts); }, 5);
  double risk_par = seconds_of([&] { icl::train::mean_query_loss(params, ds.train_prompts); }, 20);
  double pgd_par = seconds_of([&] { icl::attack::adversarial_risk(pm, attack_set, spec); }, 2);

  std::printf("%-22s %12s %12s (threads=%d) %9s\n", "kernel", "serial [ms]", "parallel [ms]", used,
              "speedup");
  auto line = [](const char* name, double s, double p) {
    std::printf("%-22s %12.3f %12.3f %22.2fx\n", name, s * 1e3, p * 1e3, s / p);
  };
  line("full-batch gradient", grad_serial, grad_par);
  line("batch risk", risk_serial, risk_par);
  line("batch pgd (64 prompts)", pgd_serial, pgd_par);
  return 0;
}
