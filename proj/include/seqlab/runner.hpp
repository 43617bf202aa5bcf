#ifndef SEQLAB_RUNNER_HPP
#define SEQLAB_RUNNER_HPP

#include <algorithm>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "io.hpp"

namespace seqlab {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"solve", "width", "ttheta",  "risk", "tail",
                                              "smoothness", "bayes", "cstar", "check-all"};
  return names;
}

struct ExperimentConfig {
  std::string experiment;
  std::string name;
  Json raw;
  std::uint64_t seed = 0;      // master seed as given
  std::uint64_t sub_seed = 0;  // derive_seed(seed, name)
  std::size_t reps = 0;
  std::size_t width_reps = 1000;
  std::optional<ConstraintSet> set;
  std::optional<PenaltySpec> penalty;
  std::optional<Vector> theta;
  SolveOptions solve;
  std::optional<std::string> output;
  std::string format = "json";
};

struct Check {
  std::string name;
  bool pass = false;
};

struct RunReport {
  std::string name;
  std::string experiment;
  Json config;
  Json results;
  std::vector<Check> checks;
  std::size_t failures = 0;  // solver failures across the run
  bool pass = false;
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;

  Json to_json() const {
    Json cs = Json::array();
    for (const auto& c : checks) cs.push_back({{"name", c.name}, {"pass", c.pass}});
    return Json{{"name", name},     {"experiment", experiment}, {"config", config},
                {"results", results}, {"checks", cs},           {"failures", failures},
                {"pass", pass}};
  }

  std::string render(const std::string& format) const {
    if (format == "csv") {
      if (!csv_header.empty()) return to_csv(csv_header, csv_rows);
      std::vector<std::vector<std::string>> rows;
      for (const auto& c : checks) rows.push_back({c.name, c.pass ? "true" : "false"});
      return to_csv({"check", "pass"}, rows);
    }
    return to_json().dump(2) + "\n";
  }
};

namespace runner_detail {

using namespace io;

inline Vector theta_from_json(const Json& j, std::optional<std::size_t> dim, const std::string& path) {
  if (j.is_array()) return as_vector(j, path);
  if (!j.is_object()) throw ConfigError(path, "expected an array or {fill, entries}");
  if (!dim) throw ConfigError(path, "the fill form needs a set to fix the dimension");
  Vector v(*dim, number_or(j, "fill", 0.0, path));
  if (j.contains("entries")) {
    const Json& es = j["entries"];
    if (!es.is_array()) throw ConfigError(join(path, "entries"), "expected [[index, value], ...]");
    for (std::size_t k = 0; k < es.size(); ++k) {
      const std::string ep = join(path, "entries") + "[" + std::to_string(k) + "]";
      if (!es[k].is_array() || es[k].size() != 2) throw ConfigError(ep, "expected [index, value]");
      const std::size_t i = as_count(es[k][0], ep + "[0]");
      if (i >= *dim) throw ConfigError(ep + "[0]", "index out of range");
      v[i] = as_number(es[k][1], ep + "[1]");
    }
  }
  return v;
}

inline Vector tgrid_from_json(const Json& j, const std::string& path) {
  if (j.is_array()) return as_vector(j, path);
  const double lo = as_number(require(j, "lo", path), join(path, "lo"));
  const double hi = as_number(require(j, "hi", path), join(path, "hi"));
  const std::size_t k = as_count(require(j, "count", path), join(path, "count"));
  if (k < 2 || !(hi > lo) || lo < 0.0) throw ConfigError(path, "need 0 <= lo < hi and count >= 2");
  Vector g(k);
  for (std::size_t i = 0; i < k; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1);
  return g;
}

inline const Json& field(const ExperimentConfig& c, const std::string& key) { return require(c.raw, key, ""); }

inline const ConstraintSet& need_set(const ExperimentConfig& c) {
  if (!c.set) throw ConfigError("set", "missing required field");
  return *c.set;
}
inline const Vector& need_theta(const ExperimentConfig& c) {
  if (!c.theta) throw ConfigError("theta", "missing required field");
  return *c.theta;
}
inline std::size_t need_reps(const ExperimentConfig& c, std::size_t min = 2) {
  if (c.reps < min) throw ConfigError("reps", "must be >= " + std::to_string(min));
  return c.reps;
}

inline PenaltySpec penalty_of(const ExperimentConfig& c) { return c.penalty.value_or(PenaltySpec::zero()); }

inline RiskOptions risk_options(const ExperimentConfig& c) {
  RiskOptions o;
  o.solve = c.solve;
  o.width_reps = c.width_reps;
  return o;
}

inline void add_check(RunReport& r, std::string name, bool pass) { r.checks.push_back({std::move(name), pass}); }

/// theta inside the set, reported as a config error otherwise.
inline void validate_theta(const ExperimentConfig& c, const Vector& theta, const std::string& path) {
  const auto& set = need_set(c);
  if (theta.size() != set.dim())
    throw ConfigError(path, "dimension " + std::to_string(theta.size()) + " does not match set dimension " +
                                std::to_string(set.dim()));
  if (!contains(set, theta, 1e-6)) throw ConfigError(path, "must lie in the set");
}

// ── experiments ─────────────────────────────────────────────────────

inline void run_solve(const ExperimentConfig& c, RunReport& r) {
  const auto& set = need_set(c);
  const Vector x = as_vector(field(c, "x"), "x");
  if (x.size() != set.dim()) throw ConfigError("x", "dimension does not match the set");
  const Solution s = solve_penalized_lse(set, penalty_of(c), x, c.solve);
  r.results = seqlab::to_json(s);
  add_check(r, "converged", s.converged);
  r.failures = s.converged ? 0 : 1;
}

inline WidthEvaluator evaluator(const ExperimentConfig& c, std::uint64_t seed) {
  const Vector& theta = need_theta(c);
  validate_theta(c, theta, "theta");
  return WidthEvaluator(theta, need_set(c), penalty_of(c), NoiseBatch{derive_seed(seed, "width"), c.width_reps, theta.size()},
                        c.solve);
}

inline Vector default_tgrid(const TThetaResult& tt) {
  Vector g(10);
  const double hi = std::max(1.0, 2.0 * tt.t_theta + 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = hi * static_cast<double>(i) / 9.0;
  return g;
}

inline void run_width(const ExperimentConfig& c, RunReport& r) {
  const WidthEvaluator eval = evaluator(c, c.sub_seed);
  Vector grid = c.raw.contains("tgrid") ? tgrid_from_json(c.raw["tgrid"], "tgrid")
                                        : default_tgrid(find_t_theta(eval));
  const WidthShapeReport w = check_width_shape(eval, grid);
  const WidthProfile p = width_profile(eval, grid);
  r.results = {{"profile", seqlab::to_json(p)}, {"shape", seqlab::to_json(w)}};
  add_check(r, "width_shape", w.pass);
  r.failures = w.failures;
  r.csv_header = {"t", "m_hat", "stderr", "G_hat"};
  for (std::size_t i = 0; i < grid.size(); ++i)
    r.csv_rows.push_back({format_number(grid[i]), format_number(p.m_hat[i]), format_number(p.se[i]),
                          format_number(p.m_hat[i] - 0.5 * grid[i] * grid[i])});
}

/// Monte-Carlo mean of ||Z||_2 from an independent stream.
inline MeanStderr noise_norm_reference(std::size_t n, std::size_t samples, std::uint64_t seed) {
  std::vector<double> norms(samples);
  const NoiseBatch b{seed, samples, n};
  const auto chunk = parallel_map<double>(samples, [&](std::size_t i) { return norm2(b.member(i)); });
  std::copy(chunk.begin(), chunk.end(), norms.begin());
  return mean_stderr(norms);
}

inline void run_ttheta(const ExperimentConfig& c, RunReport& r) {
  const WidthEvaluator eval = evaluator(c, c.sub_seed);
  const TThetaResult tt = find_t_theta(eval);
  r.results = {{"ttheta", seqlab::to_json(tt)}};
  r.failures = tt.failures;
  add_check(r, "solver_failures", detail::failures_ok(tt.failures, c.width_reps));
  if (c.raw.contains("reference")) {
    const Json& ref = c.raw["reference"];
    const std::string kind = as_string(require(ref, "kind", "reference"), "reference.kind");
    if (kind != "noise_norm") throw ConfigError("reference.kind", "only 'noise_norm' is supported");
    const std::size_t samples = as_count(require(ref, "samples", "reference"), "reference.samples");
    if (samples < 2) throw ConfigError("reference.samples", "must be >= 2");
    const double sigmas = number_or(ref, "sigmas", 3.0, "reference");
    const MeanStderr m = noise_norm_reference(eval.set().dim(), samples, derive_seed(c.sub_seed, "reference"));
    const bool ok = std::abs(tt.t_theta - m.mean) <= sigmas * tt.se;
    r.results["reference"] = {{"kind", kind}, {"samples", samples}, {"mean", m.mean}, {"stderr", m.se},
                              {"difference", tt.t_theta - m.mean}, {"allowed", sigmas * tt.se}};
    add_check(r, "t_theta_matches_reference", ok);
  }
}

inline std::optional<EstimatorSpec> estimator_of(const ExperimentConfig& c) {
  if (!c.raw.contains("estimator")) return std::nullopt;
  return estimator_from_json(c.raw["estimator"], c.set, c.penalty);
}

inline void run_risk(const ExperimentConfig& c, RunReport& r) {
  const Vector& theta = need_theta(c);
  auto est = estimator_of(c);
  if (!est) est = EstimatorSpec::penalized_lse(need_set(c), penalty_of(c));
  if (std::holds_alternative<estimators::PenalizedLse>(est->kind())) validate_theta(c, theta, "theta");
  const RiskReport rr = io::tagged("estimator", [&] { return simulate_risk(*est, theta, need_reps(c), c.sub_seed, risk_options(c)); });
  r.results = seqlab::to_json(rr);
  r.failures = rr.failures;
  add_check(r, rr.bound_1co ? "risk_bound" : "risk_run", rr.pass);
}

inline Vector deltas_of(const ExperimentConfig& c) {
  if (!c.raw.contains("deltas")) {
    Vector d;
    for (int k = 1; k <= 30; ++k) d.push_back(k);
    return d;
  }
  Vector d = as_vector(c.raw["deltas"], "deltas");
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!(d[i] >= 0.0)) throw ConfigError("deltas[" + std::to_string(i) + "]", "must be nonnegative");
  return d;
}

inline void run_tail(const ExperimentConfig& c, RunReport& r) {
  const Vector& theta = need_theta(c);
  validate_theta(c, theta, "theta");
  const TailReport t = check_tail_bound(need_set(c), penalty_of(c), theta, deltas_of(c), need_reps(c), c.sub_seed,
                                        risk_options(c));
  r.results = seqlab::to_json(t);
  r.failures = t.failures;
  add_check(r, "tail_bound", t.pass);
  r.csv_header = {"delta", "empirical", "binomial_stderr", "bound", "slack_bound", "informative", "pass"};
  for (std::size_t i = 0; i < t.deltas.size(); ++i)
    r.csv_rows.push_back({format_number(t.deltas[i]), format_number(t.empirical[i]), format_number(t.binomial_se[i]),
                          format_number(t.bounds[i]), format_number(t.slack_bounds[i]),
                          t.informative[i] ? "true" : "false", t.delta_pass[i] ? "true" : "false"});
}

/// theta1 = P(scale * g1), theta2 = P(theta1 + step * g2) for Gaussian g1, g2.
inline std::vector<std::pair<Vector, Vector>> random_pairs(const ConstraintSet& set, std::size_t count, double scale,
                                                           double step, std::uint64_t seed) {
  std::vector<std::pair<Vector, Vector>> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::mt19937_64 gen(derive_seed(seed, k));
    std::normal_distribution<double> nd;
    Vector g1(set.dim()), g2(set.dim());
    for (double& v : g1) v = scale * nd(gen);
    for (double& v : g2) v = step * nd(gen);
    Vector t1 = project(set, g1, 1e-13);
    Vector t2 = project(set, t1 + g2, 1e-13);
    out.emplace_back(std::move(t1), std::move(t2));
  }
  return out;
}

inline void run_smoothness(const ExperimentConfig& c, RunReport& r) {
  const auto& set = need_set(c);
  std::vector<std::pair<Vector, Vector>> pairs;
  if (c.raw.contains("random_pairs")) {
    const Json& rp = c.raw["random_pairs"];
    pairs = random_pairs(set, as_count(require(rp, "count", "random_pairs"), "random_pairs.count"),
                         number_or(rp, "scale", 1.0, "random_pairs"), number_or(rp, "step", 0.3, "random_pairs"),
                         derive_seed(c.sub_seed, "pairs"));
  } else {
    const Vector& t1 = need_theta(c);
    const Vector t2 = theta_from_json(field(c, "theta2"), set.dim(), "theta2");
    pairs.emplace_back(t1, t2);
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    validate_theta(c, pairs[k].first, "theta");
    validate_theta(c, pairs[k].second, "theta2");
  }
  Json rows = Json::array();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const SmoothnessReport s = check_smoothness(set, penalty_of(c), pairs[k].first, pairs[k].second, need_reps(c),
                                                derive_seed(c.sub_seed, k), risk_options(c));
    rows.push_back(seqlab::to_json(s));
    r.failures += s.failures;
    add_check(r, "risk_smoothness[" + std::to_string(k) + "]", s.risk_pass);
    add_check(r, "ttheta_interval[" + std::to_string(k) + "]", s.ttheta_pass);
  }
  r.results = {{"pairs", rows}};
}

inline Vector prior_center(const DiscretePrior& d) {
  Vector c(d.atoms.front().size(), 0.0);
  for (std::size_t i = 0; i < d.atoms.size(); ++i) c = axpy(c, d.weights[i], d.atoms[i]);
  return c;
}

inline void run_bayes(const ExperimentConfig& c, RunReport& r) {
  const PriorSpec prior = prior_from_json(field(c, "prior"), c.set, c.penalty, c.sub_seed, c.solve);
  DiscretePrior d;
  Vector center;
  Json results;
  if (const auto* pf = std::get_if<priors::Pushforward>(&prior.kind())) {
    const PushforwardSample s = sample_pushforward_prior(*pf);
    std::size_t outside = 0;
    double worst = 0.0;
    for (const auto& v : s.samples) {
      const double excess = std::max(distance(pf->set, v, 1e-12), dist2(v, pf->theta_star) - s.radius);
      worst = std::max(worst, excess);
      if (excess > 1e-6) ++outside;
    }
    results["pushforward"] = {{"t_theta_hat", s.t_theta_hat}, {"radius", s.radius}, {"samples", s.samples.size()},
                              {"failures", s.failures},       {"outside", outside}, {"max_excess", worst}};
    add_check(r, "pushforward_membership", outside == 0);
    r.failures += s.failures;
    const double w = 1.0 / static_cast<double>(s.samples.size());
    d = {s.samples, Vector(s.samples.size(), w)};
    center = pf->theta_star;
  } else {
    d = to_discrete(prior);
    center = prior_center(d);
  }

  double info = 0.0;
  const Json info_cfg = c.raw.value("information", Json("auto"));
  if (info_cfg.is_string()) {
    if (info_cfg.get<std::string>() != "auto") throw ConfigError("information", "expected a number or \"auto\"");
    bool saturated = false;
    for (const auto& a : d.atoms) {
      const ChiSquare cs = chi_sq_gaussian(a, center);
      info = std::max(info, cs.value);
      saturated = saturated || cs.saturated;
    }
    results["information_saturated"] = saturated;
  } else {
    info = as_number(info_cfg, "information");
    if (info < 0.0) throw ConfigError("information", "must be nonnegative");
  }
  std::vector<Vector> candidates = d.atoms;
  if (std::holds_alternative<priors::Pushforward>(prior.kind())) candidates.push_back(center);
  const BoundReport sb = small_ball_lower_bound(d, info, candidates);
  results["small_ball"] = seqlab::to_json(sb);

  const bool one_d = d.atoms.front().size() == 1;
  std::optional<double> oracle;
  if (one_d) {
    oracle = bayes_oracle_1d(d);
    results["bayes_oracle"] = *oracle;
    add_check(r, "small_ball_below_oracle", sb.value <= *oracle + 1e-3);
  }
  if (const auto* tp = std::get_if<priors::TwoPoint>(&prior.kind())) {
    const BoundReport lc = lecam_two_point(tp->p1, tp->p2);
    results["lecam"] = seqlab::to_json(lc);
    if (oracle) add_check(r, "lecam_below_oracle", lc.value <= *oracle + 1e-3);
  }
  if (c.reps >= 2) {
    auto est = estimator_of(c);
    if (!est) est = EstimatorSpec::penalized_lse(need_set(c), penalty_of(c));
    const AverageRisk ar = avg_risk_under_prior(*est, d, c.reps, derive_seed(c.sub_seed, "avg_risk"), c.solve);
    results["avg_risk"] = seqlab::to_json(ar);
    r.failures += ar.failures;
    add_check(r, "avg_risk_run", ar.pass);
    add_check(r, "small_ball_below_avg_risk", sb.value <= ar.mean + 3.0 * ar.se);
    if (oracle) add_check(r, "avg_risk_above_oracle", ar.mean >= *oracle - 3.0 * ar.se);
    results["bayes_ratio"] = ar.mean > 0.0 ? Json(sb.value / ar.mean) : Json(nullptr);
  }
  r.results = results;
}

inline void run_cstar(const ExperimentConfig& c, RunReport& r) {
  HardCaseConstants hc;
  if (c.raw.contains("constants")) {
    const Json& k = c.raw["constants"];
    hc.rho = number_or(k, "rho", hc.rho, "constants");
    hc.beta = number_or(k, "beta", hc.beta, "constants");
    hc.eta = number_or(k, "eta", hc.eta, "constants");
    hc.b = number_or(k, "b", hc.b, "constants");
  }
  const double threshold = number_or(c.raw, "lower_threshold", 6.05e-6, "");
  const Vector as = c.raw.contains("ratio_a") ? as_vector(c.raw["ratio_a"], "ratio_a") : Vector{0.01, 0.05, 0.1};
  const std::size_t grid = count_or(c.raw, "grid_points", 2001, "");
  if (as.empty()) throw ConfigError("ratio_a", "must be nonempty");
  const CertificateReport cert = io::tagged("constants", [&] { return certificate(hc, *std::min_element(as.begin(), as.end())); });
  Json res = seqlab::to_json(cert);
  add_check(r, "hard_constant", cert.hard_constant >= threshold);
  add_check(r, "easy_constant", cert.easy.formula >= threshold);
  add_check(r, "cstar_lower", cert.cstar_lower >= threshold);
  add_check(r, "sufficiency", cert.sufficiency.holds);

  Json ratios = Json::array();
  for (double a : as) {
    const RatioBound rb = io::tagged("ratio_a", [&] { return normalized_ratio_bound(a, grid); });
    ratios.push_back(seqlab::to_json(rb));
    add_check(r, "ratio_bound[a=" + format_number(a) + "]", rb.holds);
  }
  res["ratios"] = ratios;
  if (c.raw.contains("ratio_window")) {
    const Vector w = as_vector(c.raw["ratio_window"], "ratio_window");
    if (w.size() != 2) throw ConfigError("ratio_window", "expected [lo, hi]");
    const double a0 = *std::min_element(as.begin(), as.end());
    const double s = normalized_ratio_bound(a0, grid).sup_ratio;
    add_check(r, "sup_ratio_window[a=" + format_number(a0) + "]", s > w[0] && s < w[1]);
  }
  const QuadratureResult q = tail_integral_constant();
  res["tail_integral"] = {{"value", q.value}, {"error_estimate", q.error_estimate}};
  add_check(r, "tail_integral_at_most_21", q.value <= 21.0);
  r.results = res;
}

inline void run_check_all(const ExperimentConfig& c, RunReport& r) {
  const Vector& theta = need_theta(c);
  validate_theta(c, theta, "theta");
  const auto& set = need_set(c);
  const PenaltySpec f = penalty_of(c);
  const std::size_t reps = need_reps(c);
  const RiskOptions opts = risk_options(c);

  const WidthEvaluator eval = evaluator(c, derive_seed(c.sub_seed, "shape"));
  const WidthShapeReport shape = check_width_shape(eval, default_tgrid(find_t_theta(eval)));
  add_check(r, "width_shape", shape.pass);

  const RiskReport risk = check_risk_bound(set, f, theta, reps, derive_seed(c.sub_seed, "risk"), opts);
  add_check(r, "risk_bound", risk.pass);
  const TailReport tail = check_tail_bound(set, f, theta, deltas_of(c), reps, derive_seed(c.sub_seed, "tail"), opts);
  add_check(r, "tail_bound", tail.pass);

  const std::size_t npairs = count_or(c.raw, "pairs", 3, "");
  const auto pairs = random_pairs(set, npairs, 1.0, 0.3, derive_seed(c.sub_seed, "pairs"));
  Json smooth = Json::array();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const SmoothnessReport s = check_smoothness(set, f, pairs[k].first, pairs[k].second, std::max<std::size_t>(2, reps / 5),
                                                derive_seed(c.sub_seed, k), opts);
    smooth.push_back(seqlab::to_json(s));
    r.failures += s.failures;
    add_check(r, "smoothness[" + std::to_string(k) + "]", s.pass);
  }
  r.failures += shape.failures + risk.failures + tail.failures;
  r.results = {{"width_shape", seqlab::to_json(shape)},
               {"risk", seqlab::to_json(risk)},
               {"tail", seqlab::to_json(tail)},
               {"smoothness", smooth}};
}

}  // namespace runner_detail

/// Validates the fields shared by all experiments. `default_name` names the
/// experiment when the config has no "name" (the suite uses the file stem).
inline ExperimentConfig parse_config(const Json& j, const std::string& default_name = "",
                                     const std::string& experiment_override = "") {
  using namespace io;
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  ExperimentConfig c;
  c.raw = j;
  if (j.contains("experiment")) c.experiment = as_string(j["experiment"], "experiment");
  if (!experiment_override.empty()) {
    if (!c.experiment.empty() && c.experiment != experiment_override)
      throw ConfigError("experiment", "config says '" + c.experiment + "' but '" + experiment_override + "' was requested");
    c.experiment = experiment_override;
  }
  if (c.experiment.empty()) throw ConfigError("experiment", "missing required field");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end())
    throw ConfigError("experiment", "unknown experiment '" + c.experiment + "'");
  c.name = j.contains("name") ? as_string(j["name"], "name") : (default_name.empty() ? c.experiment : default_name);
  c.seed = as_seed(require(j, "seed", ""), "seed");
  c.sub_seed = derive_seed(c.seed, c.name);
  c.reps = count_or(j, "reps", 0, "");
  c.width_reps = count_or(j, "width_reps", 1000, "");
  if (c.width_reps < 2) throw ConfigError("width_reps", "must be >= 2");
  if (j.contains("solver")) c.solve = solve_options_from_json(j["solver"]);
  if (j.contains("set")) c.set = set_from_json(j["set"]);
  if (j.contains("penalty")) {
    c.penalty = penalty_from_json(j["penalty"]);
    if (const auto* lf = std::get_if<penalty::LinearForm>(&c.penalty->kind()); lf && c.set && lf->v.size() != c.set->dim())
      throw ConfigError("penalty.v", "dimension does not match the set");
  }
  if (j.contains("theta"))
    c.theta = runner_detail::theta_from_json(j["theta"], c.set ? std::optional(c.set->dim()) : std::nullopt, "theta");
  if (j.contains("output")) c.output = as_string(j["output"], "output");
  if (j.contains("format")) {
    c.format = as_string(j["format"], "format");
    if (c.format != "json" && c.format != "csv") throw ConfigError("format", "expected \"json\" or \"csv\"");
  }
  return c;
}

/// Runs one experiment. ConfigError marks invalid input; other seqlab::Error
/// exceptions are computational failures.
inline RunReport run_config(const ExperimentConfig& c) {
  namespace rd = runner_detail;
  RunReport r;
  r.name = c.name;
  r.experiment = c.experiment;
  r.config = c.raw;
  if (c.experiment == "solve") rd::run_solve(c, r);
  else if (c.experiment == "width") rd::run_width(c, r);
  else if (c.experiment == "ttheta") rd::run_ttheta(c, r);
  else if (c.experiment == "risk") rd::run_risk(c, r);
  else if (c.experiment == "tail") rd::run_tail(c, r);
  else if (c.experiment == "smoothness") rd::run_smoothness(c, r);
  else if (c.experiment == "bayes") rd::run_bayes(c, r);
  else if (c.experiment == "cstar") rd::run_cstar(c, r);
  else if (c.experiment == "check-all") rd::run_check_all(c, r);
  r.pass = !r.checks.empty() && std::all_of(r.checks.begin(), r.checks.end(), [](const Check& k) { return k.pass; });
  return r;
}

struct SuiteEntry {
  std::string file;
  RunReport report;
};

struct SuiteReport {
  std::vector<SuiteEntry> entries;
  bool pass = false;

  Json to_json() const {
    Json runs = Json::array();
    for (const auto& e : entries) {
      Json failed = Json::array();
      for (const auto& c : e.report.checks)
        if (!c.pass) failed.push_back(c.name);
      runs.push_back({{"file", e.file},
                      {"name", e.report.name},
                      {"experiment", e.report.experiment},
                      {"pass", e.report.pass},
                      {"failed_checks", failed}});
    }
    return Json{{"runs", runs}, {"pass", pass}};
  }
};

/// Runs every *.json in `dir` in filename order. Reports go to each config's
/// "output" path, or to `output_dir/<stem>.<format>` when given.
inline SuiteReport run_suite(const std::filesystem::path& dir,
                             const std::optional<std::filesystem::path>& output_dir = std::nullopt,
                             const std::function<void(const SuiteEntry&)>& on_done = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("", dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  if (files.empty()) throw ConfigError("", dir.string() + " contains no .json configs");
  std::sort(files.begin(), files.end());
  SuiteReport s;
  s.pass = true;
  for (const auto& f : files) {
    ExperimentConfig cfg;
    try {
      cfg = parse_config(read_json_file(f), f.stem().string());
    } catch (const ConfigError& e) {
      throw ConfigError(e.field, f.filename().string() + ": " + e.what());
    }
    RunReport rep = run_config(cfg);
    std::optional<fs::path> out;
    if (output_dir) out = *output_dir / (f.stem().string() + "." + cfg.format);
    else if (cfg.output) out = *cfg.output;
    if (out) write_file_atomic(*out, rep.render(cfg.format));
    s.pass = s.pass && rep.pass;
    s.entries.push_back({f.filename().string(), std::move(rep)});
    if (on_done) on_done(s.entries.back());
  }
  return s;
}

}  // namespace seqlab

#endif  // SEQLAB_RUNNER_HPP
