#include "icl/datagen.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "icl/binio.hpp"

namespace icl::datagen {

namespace {
// Stream ids under a dataset seed.
constexpr uint64_t kTrainTasks = 1;
constexpr uint64_t kTrainInputs = 2;
constexpr uint64_t kValTasks = 3;
// Stream id under an evaluation seed.
constexpr uint64_t kValPrompts = 4;

constexpr char kMagic[8] = {'I', 'C', 'L', 'D', 'S', 'E', 'T', '\0'};
constexpr uint32_t kVersion = 1;
}  // namespace

std::string to_string(InputDist d) {
  switch (d) {
    case InputDist::standard_gaussian: return "gaussian";
    case InputDist::rademacher: return "rademacher";
    case InputDist::uniform_unit_cov: return "uniform";
  }
  return "?";
}

InputDist input_dist_from_string(const std::string& s) {
  if (s == "gaussian" || s == "standard-gaussian") return InputDist::standard_gaussian;
  if (s == "rademacher") return InputDist::rademacher;
  if (s == "uniform" || s == "uniform-unit-cov") return InputDist::uniform_unit_cov;
  throw std::invalid_argument("unknown input distribution: " + s);
}

Task sample_task(rng::Rng& r, int d) {
  if (d < 1) throw std::invalid_argument("sample_task: d must be >= 1");
  Task task;
  task.mu.resize(d);
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < d; ++i) task.mu[i] = sd * r.gaussian();
  return task;
}

double sample_input_entry(rng::Rng& r, InputDist dist) {
  switch (dist) {
    case InputDist::standard_gaussian: return r.gaussian();
    case InputDist::rademacher: return r.rademacher();
    case InputDist::uniform_unit_cov: {
      // variance 1 on [-sqrt(3), sqrt(3))
      const double s3 = std::sqrt(3.0);
      return r.uniform(-s3, s3);
    }
  }
  return 0.0;
}

Prompt sample_prompt(rng::Rng& r, const Task& task, int t, int d, InputDist dist) {
  if (t < 1) throw std::invalid_argument("sample_prompt: t must be >= 1");
  if (static_cast<int>(task.mu.size()) != d)
    throw std::invalid_argument("sample_prompt: task dimension mismatch");
  Prompt p;
  p.task = task;
  p.x = linalg::Mat(t + 1, d + 1);
  for (int i = 0; i <= t; ++i) {
    double* row = p.x.row(i);
    for (int j = 0; j < d; ++j) row[j] = sample_input_entry(r, dist);
    double y = linalg::dot(task.mu.data(), row, d);
    if (i < t) {
      row[d] = y;
    } else {
      row[d] = 0.0;  // query label slot
      p.query_label = y;
    }
  }
  return p;
}

Dataset build_dataset(uint64_t seed, int n_train, int n_val, int t, int d, InputDist dist) {
  if (n_train < 1 || n_val < 1)
    throw std::invalid_argument("build_dataset: n_train and n_val must be >= 1");
  Dataset ds;
  ds.t = t;
  ds.d = d;
  ds.seed = seed;
  ds.dist = dist;

  rng::Rng root(seed);
  rng::Rng task_stream = root.fork(kTrainTasks);
  rng::Rng input_stream = root.fork(kTrainInputs);
  rng::Rng val_stream = root.fork(kValTasks);

  ds.train_prompts.reserve(n_train);
  for (int i = 0; i < n_train; ++i) {
    rng::Rng tr = task_stream.fork(static_cast<uint64_t>(i));
    rng::Rng xr = input_stream.fork(static_cast<uint64_t>(i));
    Task task = sample_task(tr, d);
    ds.train_prompts.push_back(sample_prompt(xr, task, t, d, dist));
  }
  ds.val_tasks.reserve(n_val);
  for (int j = 0; j < n_val; ++j) {
    rng::Rng vr = val_stream.fork(static_cast<uint64_t>(j));
    ds.val_tasks.push_back(sample_task(vr, d));
  }
  return ds;
}

std::vector<Prompt> sample_val_prompts(const Dataset& ds, uint64_t eval_seed) {
  rng::Rng stream = rng::Rng(eval_seed).fork(kValPrompts);
  std::vector<Prompt> out;
  out.reserve(ds.val_tasks.size());
  for (size_t j = 0; j < ds.val_tasks.size(); ++j) {
    rng::Rng pr = stream.fork(j);
    out.push_back(sample_prompt(pr, ds.val_tasks[j], ds.t, ds.d, ds.dist));
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_dataset: cannot open " + path);
  binio::write_magic(os, kMagic);
  binio::write_u32(os, kVersion);
  binio::write_u32(os, static_cast<uint32_t>(ds.dist));
  binio::write_u64(os, ds.seed);
  binio::write_u32(os, static_cast<uint32_t>(ds.t));
  binio::write_u32(os, static_cast<uint32_t>(ds.d));
  binio::write_u32(os, static_cast<uint32_t>(ds.train_prompts.size()));
  binio::write_u32(os, static_cast<uint32_t>(ds.val_tasks.size()));
  for (const Prompt& p : ds.train_prompts) {
    binio::write_f64s(os, p.task.mu);
    binio::write_f64s(os, p.x.data);
    binio::write_f64(os, p.query_label);
  }
  for (const Task& task : ds.val_tasks) binio::write_f64s(os, task.mu);
  if (!os) throw std::runtime_error("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
  binio::expect_magic(is, kMagic, "dataset");
  uint32_t version = binio::read_u32(is);
  if (version != kVersion) throw std::runtime_error("load_dataset: unsupported version");
  Dataset ds;
  ds.dist = static_cast<InputDist>(binio::read_u32(is));
  ds.seed = binio::read_u64(is);
  ds.t = static_cast<int>(binio::read_u32(is));
  ds.d = static_cast<int>(binio::read_u32(is));
  uint32_t n_train = binio::read_u32(is);
  uint32_t n_val = binio::read_u32(is);
  ds.train_prompts.resize(n_train);
  for (Prompt& p : ds.train_prompts) {
    p.task.mu.resize(ds.d);
    binio::read_f64s(is, p.task.mu);
    p.x = linalg::Mat(ds.t + 1, ds.d + 1);
    binio::read_f64s(is, p.x.data);
    p.query_label = binio::read_f64(is);
  }
  ds.val_tasks.resize(n_val);
  for (Task& task : ds.val_tasks) {
    task.mu.resize(ds.d);
    binio::read_f64s(is, task.mu);
  }
  return ds;
}

void dump_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("dump_dataset_csv: cannot open " + path);
  os << "kind,index,row,";
  for (int j = 0; j < ds.d; ++j) os << "x" << j << ",";
  os << "y\n";
  for (size_t i = 0; i < ds.train_prompts.size(); ++i) {
    const Prompt& p = ds.train_prompts[i];
    os << "train_mu," << i << ",-,";
    for (int j = 0; j < ds.d; ++j) os << binio::fmt_g17(p.task.mu[j]) << ",";
    os << binio::fmt_g17(p.query_label) << "\n";
    for (int r = 0; r <= ds.t; ++r) {
      os << "train_row," << i << "," << r << ",";
      for (int j = 0; j <= ds.d; ++j)
        os << binio::fmt_g17(p.x(r, j)) << (j == ds.d ? "\n" : ",");
    }
  }
  for (size_t j = 0; j < ds.val_tasks.size(); ++j) {
    os << "val_mu," << j << ",-,";
    for (int k = 0; k < ds.d; ++k) os << binio::fmt_g17(ds.val_tasks[j].mu[k]) << ",";
    os << "0\n";
  }
}

}  // namespace icl::datagen
