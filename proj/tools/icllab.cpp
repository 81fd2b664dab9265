// Command-line driver: dataset generation, training, evaluation, attacks,
// full experiment sweeps, bound evaluation and the invariant selfcheck.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "icl/analysis.hpp"
#include "icl/attack.hpp"
#include "icl/binio.hpp"
#include "icl/config.hpp"
#include "icl/datagen.hpp"
#include "icl/model.hpp"
#include "icl/par.hpp"
#include "icl/sweep.hpp"
#include "icl/theory.hpp"
#include "icl/train.hpp"

namespace fs = std::filesystem;
using icl::binio::fmt_g17;

namespace {

icl::config::KVConfig load_config(const std::string& path) {
  icl::config::KVConfig kv;
  if (!path.empty()) kv = icl::config::KVConfig::from_file(path);
  kv.apply_env_overrides(icl::sweep::RunConfig::known_keys());
  return kv;
}

icl::sweep::RunConfig resolve(const std::string& config_path, const std::string& out,
                              int threads, bool paper_mode) {
  icl::config::KVConfig kv = load_config(config_path);
  if (!out.empty()) kv.set("out_dir", out);
  if (threads > 0) kv.set("threads", std::to_string(threads));
  if (paper_mode) kv.set("paper_mode", "1");
  icl::sweep::RunConfig cfg = icl::sweep::RunConfig::from_kv(kv);
  if (cfg.threads > 0) icl::par::set_threads(cfg.threads);
  return cfg;
}

// `theory` subcommand: every bound with the inputs echoed; domain errors are
// reported per row so one bad budget does not hide the rest.
void emit_theory_csv(const icl::theory::TheoryParams& p, double c_mu, double delta,
                     std::ostream& os) {
  os << "name,value,error,d,t,m,d_m,D,r,gamma_eff,c_pe,l_f,l_x,m_out,m_y,eps\n";
  auto row = [&](const std::string& name, auto&& fn) {
    std::string value, error;
    try {
      value = fmt_g17(fn());
    } catch (const std::exception& e) {
      error = e.what();
    }
    os << name << ',' << value << ',' << error << ',' << p.d << ',' << p.t << ',' << p.m << ','
       << p.d_m << ',' << fmt_g17(p.dim_d()) << ',' << fmt_g17(p.r) << ','
       << fmt_g17(p.gamma_eff) << ',' << fmt_g17(p.c_pe) << ',' << fmt_g17(p.l_f) << ','
       << fmt_g17(p.l_x) << ',' << fmt_g17(p.m_out) << ',' << fmt_g17(p.m_y) << ','
       << fmt_g17(p.eps) << "\n";
  };
  row("phi", [&] { return icl::theory::phi(p.eps, p.t, p.d); });
  row("rc_bound_nope", [&] { return icl::theory::rc_bound_nope(p); });
  row("rc_bound_pe", [&] { return icl::theory::rc_bound_pe(p); });
  row("l_h", [&] { return icl::theory::l_h(p.m_out, p.m_y, p.l_x, p.eps); });
  row("arc_bound_nope", [&] { return icl::theory::arc_bound_nope(p); });
  row("arc_bound_pe", [&] { return icl::theory::arc_bound_pe(p); });
  row("m_y_bound", [&] { return icl::theory::m_y_bound(c_mu, delta); });
  row("delta_cov_bound", [&] { return icl::theory::delta_cov_bound(p.eps, p.t, p.d); });
  row("dudley_k1_unit_diam", [&] { return icl::theory::dudley_quadrature(1.0, 1.0); });
  row("covering_log_bound_unit", [&] { return icl::theory::covering_log_bound(p.dim_d(), 1.0, 0.1); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale in-context regression lab: one-layer attention, PGD attacks, "
               "generalization gaps and bound evaluation"};
  app.require_subcommand(1);

  std::string config_path, out, data_path, ckpt_path, params_path;
  uint64_t seed = 0;
  int threads = 0;
  bool paper_mode = false;
  app.add_option("--config", config_path, "key = value configuration file")->envname("ICL_CONFIG");
  app.add_option("--out", out, "output directory (or file for single-output commands)");
  app.add_option("--seed", seed, "seed for commands that take one");
  app.add_option("--threads", threads, "worker threads for batch kernels");
  app.add_flag("--paper-mode", paper_mode, "published-scale defaults (d_m=1024, 6 seeds, ...)");

  auto* gen = app.add_subcommand("gen", "generate a dataset file");
  std::string gen_csv;
  int gen_t = 20;
  gen->add_option("--t", gen_t, "context length");
  gen->add_option("--csv", gen_csv, "also dump a CSV rendering");

  auto* train_cmd = app.add_subcommand("train", "train one model on a dataset");
  std::string train_mode = "none";
  int train_t = 20;
  train_cmd->add_option("--data", data_path, "dataset file (generated if omitted)");
  train_cmd->add_option("--pe-mode", train_mode, "none | trainable | rope");
  train_cmd->add_option("--t", train_t, "context length when generating");

  auto* eval_cmd = app.add_subcommand("eval", "clean generalization gap of a checkpoint");
  eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--data", data_path, "dataset file")->required();

  auto* attack_cmd = app.add_subcommand("attack", "attacked risks/gaps of a checkpoint");
  std::vector<double> attack_eps{0.05, 0.2, 0.3};
  attack_cmd->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  attack_cmd->add_option("--data", data_path, "dataset file")->required();
  attack_cmd->add_option("--eps", attack_eps, "attack budgets");

  auto* sweep_cmd = app.add_subcommand("sweep", "full experiment sweep from the config");

  auto* theory_cmd = app.add_subcommand("theory", "evaluate all bound expressions as CSV");
  theory_cmd->add_option("--params", params_path, "key = value theory parameter file");

  auto* selfcheck_cmd = app.add_subcommand("selfcheck", "run the invariant suite");
  bool inject_bug = false;
  selfcheck_cmd->add_flag("--inject-grad-bug", inject_bug,
                          "test fixture: corrupt one gradient to prove the check can fail");

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      icl::sweep::RunConfig cfg = resolve(config_path, "", threads, paper_mode);
      icl::datagen::Dataset ds = icl::sweep::cell_dataset(cfg, gen_t, seed);
      std::string path = out.empty() ? "dataset.bin" : out;
      icl::datagen::save_dataset(ds, path);
      if (!gen_csv.empty()) icl::datagen::dump_dataset_csv(ds, gen_csv);
      std::cout << "wrote " << path << " (" << ds.train_prompts.size() << " train prompts, "
                << ds.val_tasks.size() << " val tasks, t=" << ds.t << ", d=" << ds.d << ")\n";
    } else if (*train_cmd) {
      icl::sweep::RunConfig cfg = resolve(config_path, "", threads, paper_mode);
      icl::datagen::Dataset ds = data_path.empty()
                                     ? icl::sweep::cell_dataset(cfg, train_t, seed)
                                     : icl::datagen::load_dataset(data_path);
      icl::model::PEMode mode = icl::model::pe_mode_from_string(train_mode);
      icl::sweep::CellOutput cell = icl::sweep::train_cell(cfg, mode, ds.t, seed);
      if (cell.failed) {
        std::cerr << "training failed: " << cell.fail_reason << "\n";
        return 1;
      }
      std::string stem = out.empty() ? "model" : out;
      icl::model::save_checkpoint(cell.params, stem + ".ckpt");
      icl::train::write_loss_curve_csv(stem + "_loss.csv", cell.loss_curve);
      std::cout << "final train loss " << fmt_g17(cell.loss_curve.back()) << "; wrote " << stem
                << ".ckpt and " << stem << "_loss.csv\n";
    } else if (*eval_cmd || *attack_cmd) {
      icl::sweep::RunConfig cfg = resolve(config_path, "", threads, paper_mode);
      icl::model::ModelParams params = icl::model::load_checkpoint(ckpt_path);
      icl::datagen::Dataset ds = icl::datagen::load_dataset(data_path);
      std::vector<double> eps_list = (*attack_cmd) ? attack_eps : std::vector<double>{0.0};
      auto records = icl::sweep::eval_cell(cfg, params, ds.t, ds.seed, eps_list);
      std::cout << icl::analysis::gap_record_csv_header() << "\n";
      for (const auto& r : records) std::cout << icl::analysis::to_csv_row(r) << "\n";
      if (!out.empty()) icl::analysis::append_gap_records_csv(out, records);
    } else if (*sweep_cmd) {
      icl::sweep::RunConfig cfg = resolve(config_path, out, threads, paper_mode);
      icl::sweep::run_sweep(cfg, std::cout);
    } else if (*theory_cmd) {
      icl::config::KVConfig kv;
      if (!params_path.empty()) kv = icl::config::KVConfig::from_file(params_path);
      icl::theory::TheoryParams p;
      p.d = kv.get_int("d", p.d);
      p.t = kv.get_int("t", p.t);
      p.m = kv.get_int("m", p.m);
      p.d_m = kv.get_int("d_m", p.d_m);
      p.big_d = kv.get_double("D", p.big_d);
      p.r = kv.get_double("r", p.r);
      p.gamma_eff = kv.get_double("gamma_eff", p.gamma_eff);
      p.c_pe = kv.get_double("c_pe", p.c_pe);
      p.l_f = kv.get_double("l_f", p.l_f);
      p.l_x = kv.get_double("l_x", p.l_x);
      p.m_out = kv.get_double("m_out", p.m_out);
      p.m_y = kv.get_double("m_y", p.m_y);
      p.eps = kv.get_double("eps", p.eps);
      double c_mu = kv.get_double("c_mu", 2.0);
      double delta = kv.get_double("delta", 0.01);
      if (out.empty()) {
        emit_theory_csv(p, c_mu, delta, std::cout);
      } else {
        std::ofstream os(out);
        emit_theory_csv(p, c_mu, delta, os);
      }
    } else if (*selfcheck_cmd) {
      if (threads > 0) icl::par::set_threads(threads);
      return icl::sweep::run_selfcheck(seed, inject_bug, std::cout) == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
