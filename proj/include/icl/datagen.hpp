#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icl/linalg.hpp"
#include "icl/rng.hpp"

namespace icl::datagen {

/// Input distribution for the example/query vectors x. All kinds have zero
/// mean and identity covariance.
enum class InputDist { standard_gaussian, rademacher, uniform_unit_cov };

std::string to_string(InputDist d);
InputDist input_dist_from_string(const std::string& s);

struct Task {
  linalg::Vec mu;  // true regression coefficients, dim d
};

/// One prompt: (t+1) x (d+1) input matrix. Rows 1..t hold (x_i, mu.x_i);
/// the last row holds (x_q, 0). query_label is mu.x_q, kept outside x.
struct Prompt {
  linalg::Mat x;
  Task task;
  double query_label = 0.0;

  int t() const { return x.rows - 1; }
  int d() const { return x.cols - 1; }
};

struct Dataset {
  std::vector<Prompt> train_prompts;  // fixed at creation
  std::vector<Task> val_tasks;
  int t = 0;
  int d = 0;
  uint64_t seed = 0;
  InputDist dist = InputDist::standard_gaussian;
};

/// mu ~ N(0, I_d / d).
Task sample_task(rng::Rng& r, int d);

double sample_input_entry(rng::Rng& r, InputDist dist);

Prompt sample_prompt(rng::Rng& r, const Task& task, int t, int d, InputDist dist);

/// n_train fixed prompts (one per train task) plus n_val held-out tasks.
/// Train tasks, train inputs and validation tasks come from separate child
/// streams of `seed`, so the three never perturb each other.
Dataset build_dataset(uint64_t seed, int n_train, int n_val, int t, int d, InputDist dist);

/// Fresh evaluation prompts, one per validation task, regenerated from the
/// stored tasks and an evaluation seed.
std::vector<Prompt> sample_val_prompts(const Dataset& ds, uint64_t eval_seed);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);
void dump_dataset_csv(const Dataset& ds, const std::string& path);

}  // namespace icl::datagen
