#include "icl/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "icl/attack.hpp"
#include "icl/binio.hpp"
#include "icl/grad.hpp"
#include "icl/par.hpp"
#include "icl/svg.hpp"
#include "icl/theory.hpp"

namespace icl::sweep {

namespace fs = std::filesystem;
using analysis::GapRecord;
using datagen::Dataset;
using datagen::Prompt;
using model::ModelParams;
using model::PEMode;

namespace {
constexpr uint64_t kInitStream = 9;
constexpr uint64_t kEvalSalt = 0xE7A1ULL;

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}
std::string join_u64(const std::vector<uint64_t>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}
std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + binio::fmt_g17(v[i]);
  return s;
}
std::string join_strings(const std::vector<std::string>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}
}  // namespace

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> RunConfig::known_keys() {
  return {"d",          "d_m",        "n_train",   "n_val",      "epochs",
          "lr",         "beta1",      "beta2",     "eps_adam",   "t_list",
          "eps_list",   "pe_modes",   "seeds",     "attack_iters",
          "attack_alpha_frac",        "pe_init_scale",           "activation",
          "dist",       "out_dir",    "threads",   "paper_mode"};
}

RunConfig RunConfig::from_kv(const config::KVConfig& kv) {
  RunConfig c;
  c.paper_mode = kv.get_int("paper_mode", 0) != 0;
  if (c.paper_mode) {
    c.d_m = 1024;
    c.n_val = 9991;
    c.epochs = 3000;
    c.seeds = {0, 1, 2, 3, 4, 5};
  }
  c.d = kv.get_int("d", c.d);
  c.d_m = kv.get_int("d_m", c.d_m);
  c.n_train = kv.get_int("n_train", c.n_train);
  c.n_val = kv.get_int("n_val", c.n_val);
  c.epochs = kv.get_int("epochs", c.epochs);
  c.lr = kv.get_double("lr", c.lr);
  c.beta1 = kv.get_double("beta1", c.beta1);
  c.beta2 = kv.get_double("beta2", c.beta2);
  c.eps_adam = kv.get_double("eps_adam", c.eps_adam);
  c.t_list = kv.get_int_list("t_list", c.t_list);
  c.eps_list = kv.get_double_list("eps_list", c.eps_list);
  c.pe_modes = kv.get_string_list("pe_modes", c.pe_modes);
  {
    std::vector<uint64_t> seeds;
    bool have = kv.has("seeds");
    if (have) {
      for (const std::string& s : config::split_list(kv.get_string("seeds", "")))
        seeds.push_back(std::stoull(s));
      c.seeds = seeds;
    }
  }
  c.attack_iters = kv.get_int("attack_iters", c.attack_iters);
  c.attack_alpha_frac = kv.get_double("attack_alpha_frac", c.attack_alpha_frac);
  c.pe_init_scale = kv.get_double("pe_init_scale", c.pe_init_scale);
  c.activation = kv.get_string("activation", c.activation);
  c.dist = kv.get_string("dist", c.dist);
  c.out_dir = kv.get_string("out_dir", c.out_dir);
  c.threads = kv.get_int("threads", c.threads);

  if (c.t_list.empty() || c.eps_list.empty() || c.pe_modes.empty() || c.seeds.empty())
    throw std::invalid_argument("sweep config: all lists must be non-empty");
  for (const std::string& m : c.pe_modes) model::pe_mode_from_string(m);  // validate early
  return c;
}

std::string RunConfig::canonical_text() const {
  std::ostringstream os;
  os << "activation = " << activation << "\n";
  os << "attack_alpha_frac = " << binio::fmt_g17(attack_alpha_frac) << "\n";
  os << "attack_iters = " << attack_iters << "\n";
  os << "beta1 = " << binio::fmt_g17(beta1) << "\n";
  os << "beta2 = " << binio::fmt_g17(beta2) << "\n";
  os << "d = " << d << "\n";
  os << "d_m = " << d_m << "\n";
  os << "dist = " << dist << "\n";
  os << "epochs = " << epochs << "\n";
  os << "eps_adam = " << binio::fmt_g17(eps_adam) << "\n";
  os << "eps_list = " << join_doubles(eps_list) << "\n";
  os << "lr = " << binio::fmt_g17(lr) << "\n";
  os << "n_train = " << n_train << "\n";
  os << "n_val = " << n_val << "\n";
  os << "paper_mode = " << (paper_mode ? 1 : 0) << "\n";
  os << "pe_init_scale = " << binio::fmt_g17(pe_init_scale) << "\n";
  os << "pe_modes = " << join_strings(pe_modes) << "\n";
  os << "seeds = " << join_u64(seeds) << "\n";
  os << "t_list = " << join_ints(t_list) << "\n";
  return os.str();
}

std::string RunConfig::run_id() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

model::Activation RunConfig::activation_enum() const {
  if (activation == "relu") return model::Activation::relu;
  if (activation == "identity") return model::Activation::identity;
  throw std::invalid_argument("unknown activation: " + activation);
}

datagen::InputDist RunConfig::dist_enum() const { return datagen::input_dist_from_string(dist); }

Dataset cell_dataset(const RunConfig& cfg, int t, uint64_t seed) {
  return datagen::build_dataset(seed, cfg.n_train, cfg.n_val, t, cfg.d, cfg.dist_enum());
}

ModelParams cell_init(const RunConfig& cfg, PEMode mode, int t, uint64_t seed) {
  rng::Rng init_rng = rng::Rng(seed).fork(kInitStream);
  return model::init_params(init_rng, cfg.d, cfg.d_m, t, mode, cfg.pe_init_scale,
                            cfg.activation_enum());
}

uint64_t eval_seed_for(uint64_t seed) { return seed ^ kEvalSalt; }

CellOutput train_cell(const RunConfig& cfg, PEMode mode, int t, uint64_t seed) {
  CellOutput out;
  Dataset ds = cell_dataset(cfg, t, seed);
  ModelParams init = cell_init(cfg, mode, t, seed);
  train::TrainConfig tc;
  tc.lr = cfg.lr;
  tc.epochs = cfg.epochs;
  tc.beta1 = cfg.beta1;
  tc.beta2 = cfg.beta2;
  tc.eps_adam = cfg.eps_adam;
  tc.seed = seed;
  try {
    train::TrainResult res = train::run_training(ds.train_prompts, std::move(init), tc);
    out.params = std::move(res.params);
    out.loss_curve = std::move(res.loss_curve);
  } catch (const std::exception& e) {
    out.failed = true;
    out.fail_reason = e.what();
  }
  return out;
}

std::vector<GapRecord> eval_cell(const RunConfig& cfg, const ModelParams& params, int t,
                                 uint64_t seed, const std::vector<double>& eps_list) {
  Dataset ds = cell_dataset(cfg, t, seed);
  std::vector<GapRecord> records;
  for (double eps : eps_list) {
    std::optional<attack::AttackSpec> spec;
    if (eps > 0.0) {
      attack::AttackSpec s;
      s.eps = eps;
      s.iters = cfg.attack_iters;
      s.alpha = eps * cfg.attack_alpha_frac;
      spec = s;
    }
    records.push_back(analysis::generalization_gap(params, ds, eval_seed_for(seed), spec));
  }
  return records;
}

namespace {
struct SeriesKey {
  std::string mode;
  double eps;
  bool operator<(const SeriesKey& o) const {
    return mode < o.mode || (mode == o.mode && eps < o.eps);
  }
};

void write_aggregate_csv(const std::string& path,
                         const std::map<SeriesKey, std::map<int, std::vector<double>>>& by_series) {
  std::ofstream os(path);
  os << "pe_mode,eps,t,mean_gap,min_gap,max_gap,n_seeds\n";
  for (const auto& [key, by_t] : by_series) {
    for (const auto& [t, gaps] : by_t) {
      double mn = *std::min_element(gaps.begin(), gaps.end());
      double mx = *std::max_element(gaps.begin(), gaps.end());
      double mean = 0.0;
      for (double g : gaps) mean += g;
      mean /= static_cast<double>(gaps.size());
      os << key.mode << ',' << binio::fmt_g17(key.eps) << ',' << t << ','
         << binio::fmt_g17(mean) << ',' << binio::fmt_g17(mn) << ',' << binio::fmt_g17(mx)
         << ',' << gaps.size() << "\n";
    }
  }
}

svg::Series make_series(const std::string& label, const std::map<int, std::vector<double>>& by_t) {
  svg::Series s;
  s.label = label;
  for (const auto& [t, gaps] : by_t) {
    double mn = *std::min_element(gaps.begin(), gaps.end());
    double mx = *std::max_element(gaps.begin(), gaps.end());
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= static_cast<double>(gaps.size());
    s.x.push_back(t);
    s.mean.push_back(mean);
    s.lo.push_back(mn);
    s.hi.push_back(mx);
  }
  return s;
}
}  // namespace

void run_sweep(const RunConfig& cfg, std::ostream& log) {
  if (cfg.threads > 0) par::set_threads(cfg.threads);
  const std::string id = cfg.run_id();
  fs::create_directories(cfg.out_dir);
  auto path_of = [&](const std::string& stem, const std::string& ext) {
    return (fs::path(cfg.out_dir) / (stem + "_" + id + ext)).string();
  };

  {
    std::ofstream cfgout(path_of("config", ".txt"));
    cfgout << cfg.canonical_text();
  }

  // warn on attack budgets outside the phi domain
  for (int t : cfg.t_list)
    for (double eps : cfg.eps_list)
      if (eps > 0.0 && eps >= std::sqrt(static_cast<double>(t)) - std::sqrt(static_cast<double>(cfg.d)))
        log << "warning: eps=" << eps << " at t=" << t
            << " violates eps < sqrt(t) - sqrt(d); bound expressions are undefined there\n";

  std::vector<GapRecord> all_records;
  std::ofstream failures;
  for (const std::string& mode_name : cfg.pe_modes) {
    PEMode mode = model::pe_mode_from_string(mode_name);
    for (int t : cfg.t_list) {
      for (uint64_t seed : cfg.seeds) {
        log << "cell mode=" << mode_name << " t=" << t << " seed=" << seed << " ... " << std::flush;
        CellOutput cell = train_cell(cfg, mode, t, seed);
        if (cell.failed) {
          log << "FAILED: " << cell.fail_reason << "\n";
          if (!failures.is_open()) {
            failures.open(path_of("failed_cells", ".csv"), std::ios::app);
            failures << "pe_mode,t,seed,reason\n";
          }
          failures << mode_name << ',' << t << ',' << seed << ',' << cell.fail_reason << "\n";
          continue;
        }
        std::ostringstream stem;
        stem << "loss_curve_" << mode_name << "_t" << t << "_seed" << seed;
        train::write_loss_curve_csv(path_of(stem.str(), ".csv"), cell.loss_curve);
        std::ostringstream ck;
        ck << "ckpt_" << mode_name << "_t" << t << "_seed" << seed;
        model::save_checkpoint(cell.params, path_of(ck.str(), ".bin"));

        std::vector<GapRecord> records = eval_cell(cfg, cell.params, t, seed, cfg.eps_list);
        analysis::append_gap_records_csv(path_of("records", ".csv"), records);
        all_records.insert(all_records.end(), records.begin(), records.end());
        log << "train_loss=" << binio::fmt_g17(cell.loss_curve.empty() ? 0.0 : cell.loss_curve.back())
            << " clean_gap=" << binio::fmt_g17(records.empty() ? 0.0 : records.front().gap) << "\n";
      }
    }
  }

  // aggregates over seeds, keyed by (mode, eps)
  std::map<SeriesKey, std::map<int, std::vector<double>>> by_series;
  for (const GapRecord& r : all_records)
    by_series[{model::to_string(r.pe_mode), r.eps}][r.t].push_back(r.gap);

  write_aggregate_csv(path_of("aggregate_gaps", ".csv"), by_series);

  // context-length comparison table: mean clean gap, one column per mode
  {
    std::ofstream os(path_of("table_gap_comparison", ".csv"));
    os << "t";
    for (const std::string& m : cfg.pe_modes) os << ',' << m;
    os << "\n";
    for (int t : cfg.t_list) {
      os << t;
      for (const std::string& m : cfg.pe_modes) {
        auto it = by_series.find({m, 0.0});
        if (it != by_series.end() && it->second.count(t)) {
          const auto& gaps = it->second.at(t);
          double mean = 0.0;
          for (double g : gaps) mean += g;
          os << ',' << binio::fmt_g17(mean / static_cast<double>(gaps.size()));
        } else {
          os << ",";
        }
      }
      os << "\n";
    }
  }

  // figure 1: clean gap vs t per mode
  {
    std::vector<svg::Series> series;
    for (const std::string& m : cfg.pe_modes) {
      auto it = by_series.find({m, 0.0});
      if (it != by_series.end()) series.push_back(make_series(m, it->second));
    }
    svg::write_line_chart(path_of("fig_clean_gap_vs_t", ".svg"),
                          "Mean generalization gap vs context length", "t", "gap", series);
  }
  // figure 2: attacked gap vs t per mode at the smallest positive budget
  double fig2_eps = 0.0;
  for (double e : cfg.eps_list)
    if (e > 0.0 && (fig2_eps == 0.0 || e < fig2_eps)) fig2_eps = e;
  if (fig2_eps > 0.0) {
    std::vector<svg::Series> series;
    for (const std::string& m : cfg.pe_modes) {
      auto it = by_series.find({m, fig2_eps});
      if (it != by_series.end()) series.push_back(make_series(m, it->second));
    }
    svg::write_line_chart(path_of("fig_attacked_gap_vs_t", ".svg"),
                          "Mean attacked generalization gap vs context length (eps=" +
                              binio::fmt_g17(fig2_eps) + ")",
                          "t", "gap", series);
  }
  // figure 3: attacked gap vs t per eps for the first mode
  {
    std::vector<svg::Series> series;
    const std::string base_mode = cfg.pe_modes.front();
    for (double e : cfg.eps_list) {
      auto it = by_series.find({base_mode, e});
      if (it != by_series.end())
        series.push_back(make_series("eps=" + binio::fmt_g17(e), it->second));
    }
    svg::write_line_chart(path_of("fig_gap_vs_t_by_eps", ".svg"),
                          "Attacked generalization gap vs context length (" + base_mode + ")",
                          "t", "gap", series);
  }
  log << "sweep " << id << " complete: " << all_records.size() << " records\n";
}

int run_selfcheck(uint64_t seed, bool inject_grad_bug, std::ostream& os) {
  int failures = 0;
  auto report = [&](const std::string& name, bool pass, const std::string& detail) {
    os << (pass ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    if (!pass) ++failures;
  };
  rng::Rng root(seed);

  {  // softmax rows sum to one, extreme but finite scores included
    rng::Rng r = root.fork(1);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      linalg::Mat m(8, 8);
      for (double& v : m.data) v = r.uniform(-700.0, 700.0);
      linalg::Mat s = linalg::row_softmax(m);
      for (int i = 0; i < s.rows; ++i) {
        double sum = 0.0;
        for (int j = 0; j < s.cols; ++j) sum += s(i, j);
        worst = std::max(worst, std::abs(sum - 1.0));
      }
    }
    report("softmax_row_sums", worst < 1e-12, "max |row sum - 1| = " + binio::fmt_g17(worst));
  }

  {  // finite-difference gradient agreement, both activations
    rng::Rng r = root.fork(2);
    const double h = 1e-5;
    double worst = 0.0;
    for (model::Activation act : {model::Activation::relu, model::Activation::identity}) {
      for (int rep = 0; rep < 3; ++rep) {
        rng::Rng ir = r.fork(rep + (act == model::Activation::relu ? 0 : 100));
        model::ModelParams p =
            model::init_params(ir, 3, 8, 6, model::PEMode::trainable, 1.0, act);
        datagen::Task task = datagen::sample_task(ir, 3);
        datagen::Prompt prompt =
            datagen::sample_prompt(ir, task, 6, 3, datagen::InputDist::standard_gaussian);
        worst = std::max(worst, grad::fd_check(p, prompt.x, prompt.query_label, h));
        if (inject_grad_bug) {
          // test fixture: corrupt one analytic coordinate; the comparison
          // below must then report a mismatch
          grad::GradBundle g = grad::backward(p, prompt.x, prompt.query_label);
          g.d_w_c[0] += 1.0 + std::abs(g.d_w_c[0]);
          model::ModelParams work = p;
          double orig = work.w_c[0];
          work.w_c[0] = orig + h;
          double lp = model::forward(work, prompt.x) - prompt.query_label;
          lp *= lp;
          work.w_c[0] = orig - h;
          double lm = model::forward(work, prompt.x) - prompt.query_label;
          lm *= lm;
          double fd = (lp - lm) / (2.0 * h);
          worst = std::max(worst, std::abs(fd - g.d_w_c[0]) /
                                      std::max({1e-8, std::abs(fd), std::abs(g.d_w_c[0])}));
        }
      }
    }
    report("gradient_fd", worst < 1e-5, "max relative error = " + binio::fmt_g17(worst));
  }

  {  // rope rotations: isometry and relative-position identity
    rng::Rng r = root.fork(3);
    const int dm = 16;
    double worst_norm = 0.0, worst_rel = 0.0;
    for (int rep = 0; rep < 300; ++rep) {
      linalg::Vec q(dm), k(dm);
      for (double& v : q) v = r.gaussian();
      for (double& v : k) v = r.gaussian();
      int i = static_cast<int>(r.next_u64() % 32);
      int j = static_cast<int>(r.next_u64() % 32);
      linalg::Vec qi = q, kj = k, qrel = q;
      model::rope_rotate_row(qi.data(), dm, i, +1);
      model::rope_rotate_row(kj.data(), dm, j, +1);
      worst_norm = std::max(worst_norm, std::abs(linalg::norm2(qi) - linalg::norm2(q)));
      model::rope_rotate_row(qrel.data(), dm, i - j, +1);
      double lhs = linalg::dot(qi.data(), kj.data(), dm);
      double rhs = linalg::dot(qrel.data(), k.data(), dm);
      worst_rel = std::max(worst_rel, std::abs(lhs - rhs));
    }
    report("rope_identities", worst_norm < 1e-10 && worst_rel < 1e-10,
           "max norm drift = " + binio::fmt_g17(worst_norm) +
               ", max relative-position mismatch = " + binio::fmt_g17(worst_rel));
  }

  {  // Weyl inequality on random pairs
    rng::Rng r = root.fork(4);
    double worst = -1e300;
    for (int rep = 0; rep < 200; ++rep) {
      linalg::Mat a(6, 4), b(6, 4);
      for (double& v : a.data) v = r.gaussian();
      for (double& v : b.data) v = r.gaussian();
      worst = std::max(worst, theory::weyl_check(a, b));
    }
    report("weyl_inequality", worst <= 1e-9, "max violation = " + binio::fmt_g17(worst));
  }

  {  // smallest-singular-value tail bound
    double rate = theory::sigma_min_tail_mc(50, 5, 2.0, 2000, root.fork(5).next_u64());
    double bound = std::exp(-2.0);
    double slack = 3.0 * std::sqrt(bound / 2000.0) + 0.01;
    report("sigma_min_tail", rate <= bound + slack,
           "rate = " + binio::fmt_g17(rate) + " vs bound+slack = " + binio::fmt_g17(bound + slack));
  }

  {  // Dudley quadrature: K=1 closed form and the decomposition bound
    double worst = 0.0;
    bool decomp_ok = true;
    for (double diam : {0.5, 1.0, 3.0}) {
      double got = theory::dudley_quadrature(diam, 1.0);
      worst = std::max(worst, std::abs(got - diam * std::sqrt(std::numbers::pi) / 2.0));
      for (double k : {1.0, 2.718281828459045, 10.0}) {
        double val = theory::dudley_quadrature(diam, k);
        double bound = diam * std::sqrt(std::log(k)) + diam * std::sqrt(std::numbers::pi) / 2.0;
        if (val > bound + 1e-6) decomp_ok = false;
      }
    }
    report("dudley_quadrature", worst < 1e-6 && decomp_ok,
           "max |K=1 - diam*sqrt(pi)/2| = " + binio::fmt_g17(worst));
  }

  {  // PGD contract and the example-Gram perturbation bound
    rng::Rng r = root.fork(6);
    model::ModelParams p = model::init_params(r, 3, 16, 8, model::PEMode::none, 0.0);
    attack::PromptModel pm = attack::wrap_model(p);
    attack::AttackSpec spec = attack::AttackSpec::l2(0.3);
    bool budget_ok = true, mask_ok = true, ascent_ok = true, gram_ok = true;
    double gram_bound = theory::delta_cov_bound(spec.eps, 8, 3);
    for (int rep = 0; rep < 50; ++rep) {
      datagen::Task task = datagen::sample_task(r, 3);
      datagen::Prompt prompt =
          datagen::sample_prompt(r, task, 8, 3, datagen::InputDist::standard_gaussian);
      linalg::Mat xa = attack::pgd(pm, prompt.x, prompt.query_label, spec);
      linalg::Mat diff = xa;
      for (size_t kk = 0; kk < diff.data.size(); ++kk) diff.data[kk] -= prompt.x.data[kk];
      if (linalg::frobenius_norm(diff) > spec.eps + 1e-9) budget_ok = false;
      for (int i = 0; i < xa.rows; ++i)
        if (xa(i, 3) != prompt.x(i, 3)) mask_ok = false;
      double clean = pm.predict(prompt.x) - prompt.query_label;
      double adv = pm.predict(xa) - prompt.query_label;
      if (adv * adv < clean * clean) ascent_ok = false;
      if (attack::gram_perturbation(prompt.x, xa) > gram_bound + 1e-9) gram_ok = false;
    }
    report("pgd_contract", budget_ok && mask_ok && ascent_ok,
           std::string("budget ") + (budget_ok ? "ok" : "VIOLATED") + ", label column " +
               (mask_ok ? "bit-exact" : "TOUCHED") + ", ascent " + (ascent_ok ? "ok" : "VIOLATED"));
    report("gram_perturbation_bound", gram_ok,
           "all perturbations within " + binio::fmt_g17(gram_bound) + " + 1e-9");
  }

  os << (failures == 0 ? "selfcheck: all checks passed\n"
                       : "selfcheck: " + std::to_string(failures) + " check(s) failed\n");
  return failures;
}

}  // namespace icl::sweep
