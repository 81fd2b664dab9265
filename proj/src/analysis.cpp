#include "icl/analysis.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "icl/binio.hpp"
#include "icl/par.hpp"
#include "icl/train.hpp"

namespace icl::analysis {

using datagen::Dataset;
using datagen::Prompt;
using linalg::Mat;
using linalg::Vec;
using model::ModelParams;

namespace {
constexpr uint64_t kQueryStream = 7;
constexpr uint64_t kSignStream = 8;
}  // namespace

double risk(const ModelParams& params, std::span<const Prompt> prompts) {
  return train::mean_query_loss(params, prompts);
}

double risk(const std::function<double(const Mat&)>& predict, std::span<const Prompt> prompts) {
  const int n = static_cast<int>(prompts.size());
  if (n == 0) throw std::invalid_argument("risk: empty prompt set");
  std::vector<double> losses(n);
  par::parallel_for(n, [&](int i) {
    double diff = predict(prompts[i].x) - prompts[i].query_label;
    losses[i] = diff * diff;
  });
  return par::tree_mean(std::move(losses));
}

GapRecord generalization_gap(const ModelParams& params, const Dataset& ds, uint64_t eval_seed,
                             const std::optional<attack::AttackSpec>& atk) {
  GapRecord rec;
  rec.t = ds.t;
  rec.pe_mode = params.pe_mode;
  rec.seed = ds.seed;

  std::vector<Prompt> val_prompts = datagen::sample_val_prompts(ds, eval_seed);
  const bool attacked = atk.has_value() && atk->eps > 0.0;
  if (attacked) {
    attack::PromptModel pm = attack::wrap_model(params);
    std::vector<Prompt> atk_train = attack::attack_prompts(pm, ds.train_prompts, *atk);
    std::vector<Prompt> atk_val = attack::attack_prompts(pm, val_prompts, *atk);
    rec.attacked = true;
    rec.eps = atk->eps;
    rec.train_risk = risk(params, atk_train);
    rec.val_risk = risk(params, atk_val);
  } else {
    rec.train_risk = risk(params, ds.train_prompts);
    rec.val_risk = risk(params, val_prompts);
  }
  rec.gap = rec.val_risk - rec.train_risk;
  return rec;
}

EffWeight effective_weight(const std::function<double(const Mat&)>& predict,
                           const Prompt& context, int n_queries, uint64_t seed) {
  const int d = context.d();
  if (n_queries < 10 * d)
    throw std::invalid_argument("effective_weight: need at least 10*d query samples");
  rng::Rng qr = rng::Rng(seed).fork(kQueryStream);
  Mat design(n_queries, d);
  Vec preds(n_queries);
  Mat x = context.x;
  const int qrow = x.rows - 1;
  for (int k = 0; k < n_queries; ++k) {
    for (int j = 0; j < d; ++j) {
      double v = qr.gaussian();
      design(k, j) = v;
      x(qrow, j) = v;
    }
    x(qrow, d) = 0.0;
    preds[k] = predict(x);
  }
  EffWeight ew;
  ew.w_eff = linalg::least_squares(design, preds);
  double ss = 0.0;
  for (int k = 0; k < n_queries; ++k) {
    double r = preds[k] - linalg::dot(design.row(k), ew.w_eff.data(), d);
    ss += r * r;
  }
  ew.residual_rms = std::sqrt(ss / n_queries);
  return ew;
}

EffWeight effective_weight(const ModelParams& params, const Prompt& context, int n_queries,
                           uint64_t seed) {
  return effective_weight([&](const Mat& x) { return model::forward(params, x); }, context,
                          n_queries, seed);
}

double c_pe_estimate(const std::function<double(const Mat&)>& predict_pe,
                     const std::function<double(const Mat&)>& predict_nope,
                     std::span<const Prompt> contexts, int n_queries, uint64_t seed,
                     std::vector<double>* per_context) {
  if (contexts.empty()) throw std::invalid_argument("c_pe_estimate: no contexts");
  const int n = static_cast<int>(contexts.size());
  std::vector<double> diffs(n);
  par::parallel_for(n, [&](int i) {
    uint64_t ctx_seed = rng::Rng(seed).fork(static_cast<uint64_t>(i)).next_u64();
    EffWeight a = effective_weight(predict_pe, contexts[i], n_queries, ctx_seed);
    EffWeight b = effective_weight(predict_nope, contexts[i], n_queries, ctx_seed);
    double s = 0.0;
    for (size_t j = 0; j < a.w_eff.size(); ++j) {
      double dd = a.w_eff[j] - b.w_eff[j];
      s += dd * dd;
    }
    diffs[i] = std::sqrt(s);
  });
  if (per_context) *per_context = diffs;
  return par::tree_mean(std::move(diffs));
}

double c_pe_estimate(const ModelParams& pe_params, const ModelParams& nope_params,
                     std::span<const Prompt> contexts, int n_queries, uint64_t seed,
                     std::vector<double>* per_context) {
  return c_pe_estimate([&](const Mat& x) { return model::forward(pe_params, x); },
                       [&](const Mat& x) { return model::forward(nope_params, x); }, contexts,
                       n_queries, seed, per_context);
}

double bias_rc_mc(double c_pe, const std::vector<Vec>& queries, int n_sigma, uint64_t seed,
                  double* stderr_out) {
  const size_t m = queries.size();
  if (m == 0) throw std::invalid_argument("bias_rc_mc: no query vectors");
  if (n_sigma < 1) throw std::invalid_argument("bias_rc_mc: n_sigma must be >= 1");
  const size_t d = queries[0].size();
  rng::Rng sr = rng::Rng(seed).fork(kSignStream);
  double acc = 0.0, acc2 = 0.0;
  Vec sum(d);
  for (int s = 0; s < n_sigma; ++s) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (size_t j = 0; j < m; ++j) {
      double sigma = sr.rademacher();
      linalg::axpy(sum.data(), sigma, queries[j].data(), static_cast<int>(d));
    }
    double nrm = linalg::norm2(sum);
    acc += nrm;
    acc2 += nrm * nrm;
  }
  const double scale = c_pe / static_cast<double>(m);
  if (stderr_out) {
    double mean = acc / n_sigma;
    double var = std::max(0.0, acc2 / n_sigma - mean * mean);
    *stderr_out = scale * std::sqrt(var / n_sigma);
  }
  return scale * (acc / n_sigma);
}

double lipschitz_est(const attack::PromptModel& m, std::span<const Prompt> prompts,
                     double safety, const attack::AttackSpec* probe, int probe_limit) {
  const int n = static_cast<int>(prompts.size());
  if (n == 0) throw std::invalid_argument("lipschitz_est: empty prompt set");
  attack::AttackSpec mask_spec;  // default mask: label column excluded, query row included
  if (probe) mask_spec.perturb_query = probe->perturb_query;

  std::vector<double> norms(n, 0.0);
  par::parallel_for(n, [&](int i) {
    Mat g = m.predict_grad(prompts[i].x);
    attack::mask_input_grad(g, mask_spec);
    double best = linalg::frobenius_norm(g);
    if (probe && probe->eps > 0.0 && i < probe_limit) {
      attack::pgd(m, prompts[i].x, prompts[i].query_label, *probe, [&](const Mat& xc) {
        Mat gi = m.predict_grad(xc);
        attack::mask_input_grad(gi, mask_spec);
        best = std::max(best, linalg::frobenius_norm(gi));
      });
    }
    norms[i] = best;
  });
  double mx = 0.0;
  for (double v : norms) mx = std::max(mx, v);
  return safety * mx;
}

std::string gap_record_csv_header() {
  return "t,eps,pe_mode,seed,attacked,train_risk,val_risk,gap";
}

std::string to_csv_row(const GapRecord& r) {
  std::ostringstream os;
  os << r.t << ',' << binio::fmt_g17(r.eps) << ',' << model::to_string(r.pe_mode) << ','
     << r.seed << ',' << (r.attacked ? 1 : 0) << ',' << binio::fmt_g17(r.train_risk) << ','
     << binio::fmt_g17(r.val_risk) << ',' << binio::fmt_g17(r.gap);
  return os.str();
}

GapRecord gap_record_from_csv_row(const std::string& line) {
  std::istringstream is(line);
  std::string field;
  auto next = [&]() {
    if (!std::getline(is, field, ',')) throw std::runtime_error("gap record: short row");
    return field;
  };
  GapRecord r;
  r.t = std::stoi(next());
  r.eps = std::stod(next());
  r.pe_mode = model::pe_mode_from_string(next());
  r.seed = std::stoull(next());
  r.attacked = std::stoi(next()) != 0;
  r.train_risk = std::stod(next());
  r.val_risk = std::stod(next());
  r.gap = std::stod(next());
  return r;
}

void append_gap_records_csv(const std::string& path, std::span<const GapRecord> records) {
  bool need_header = true;
  {
    std::ifstream probe(path);
    if (probe.good() && probe.peek() != std::ifstream::traits_type::eof()) need_header = false;
  }
  std::ofstream os(path, std::ios::app);
  if (!os) throw std::runtime_error("append_gap_records_csv: cannot open " + path);
  if (need_header) os << gap_record_csv_header() << "\n";
  for (const GapRecord& r : records) os << to_csv_row(r) << "\n";
}

std::vector<GapRecord> read_gap_records_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_gap_records_csv: cannot open " + path);
  std::vector<GapRecord> out;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (first && line == gap_record_csv_header()) {
      first = false;
      continue;
    }
    first = false;
    out.push_back(gap_record_from_csv_row(line));
  }
  return out;
}

}  // namespace icl::analysis
