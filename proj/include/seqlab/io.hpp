#ifndef SEQLAB_IO_HPP
#define SEQLAB_IO_HPP

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bayes_bounds.hpp"
#include "convex_geometry.hpp"
#include "cstar.hpp"
#include "estimator.hpp"
#include "gaussian_width.hpp"
#include "penalties.hpp"
#include "risk_lab.hpp"

namespace seqlab {

using Json = nlohmann::json;

/// Invalid configuration; `field` is the dotted path of the offending entry.
struct ConfigError : Error {
  ConfigError(std::string field_path, const std::string& msg)
      : Error(field_path.empty() ? msg : field_path + ": " + msg), field(std::move(field_path)) {}
  std::string field;
};

namespace io {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(join(path, key), "missing required field");
  return *it;
}

inline double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline std::size_t as_count(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw ConfigError(path, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

inline std::uint64_t as_seed(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer seed");
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const auto v = j.get<std::int64_t>();
  if (v < 0) throw ConfigError(path, "seed must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

inline Vector as_vector(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vector v;
  v.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

inline double number_or(const Json& j, const std::string& key, double fallback, const std::string& path) {
  auto it = j.find(key);
  return it == j.end() ? fallback : as_number(*it, join(path, key));
}

inline std::size_t count_or(const Json& j, const std::string& key, std::size_t fallback, const std::string& path) {
  auto it = j.find(key);
  return it == j.end() ? fallback : as_count(*it, join(path, key));
}

inline std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

/// Array, or a scalar broadcast to `dim` entries.
inline Vector vector_or_fill(const Json& obj, const std::string& key, const std::string& path,
                             std::optional<std::size_t> dim) {
  const Json& j = require(obj, key, path);
  if (j.is_array()) return as_vector(j, join(path, key));
  if (!dim) throw ConfigError(join(path, "dim"), "required when " + key + " is a scalar");
  return Vector(*dim, as_number(j, join(path, key)));
}

/// Rethrows library validation errors as ConfigError tagged with `path`.
template <class Fn>
auto tagged(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace io

// ── Constraint sets ─────────────────────────────────────────────────

inline ConstraintSet set_from_json(const Json& j, const std::string& path = "set") {
  using namespace io;
  const std::string kind = as_string(require(j, "kind", path), join(path, "kind"));
  std::optional<std::size_t> dim;
  if (j.contains("dim")) dim = as_count(j["dim"], join(path, "dim"));
  return tagged(path, [&] {
    if (kind == "full_space") return ConstraintSet::full_space(as_count(require(j, "dim", path), join(path, "dim")));
    if (kind == "singleton") return ConstraintSet::singleton(as_vector(require(j, "point", path), join(path, "point")));
    if (kind == "box") return ConstraintSet::box(vector_or_fill(j, "lo", path, dim), vector_or_fill(j, "hi", path, dim));
    if (kind == "ball" || kind == "l1_ball") {
      Vector c = j.contains("center") ? vector_or_fill(j, "center", path, dim)
                                      : Vector(dim ? *dim : throw ConfigError(join(path, "center"), "missing required field"), 0.0);
      const double r = as_number(require(j, "radius", path), join(path, "radius"));
      return kind == "ball" ? ConstraintSet::ball(std::move(c), r) : ConstraintSet::l1_ball(std::move(c), r);
    }
    if (kind == "monotone_cone") return ConstraintSet::monotone_cone(as_count(require(j, "dim", path), join(path, "dim")));
    if (kind == "weighted_ellipsoid")
      return ConstraintSet::weighted_ellipsoid(as_vector(require(j, "weights", path), join(path, "weights")),
                                               as_number(require(j, "radius", path), join(path, "radius")));
    if (kind == "intersection") {
      const Json& ms = require(j, "members", path);
      if (!ms.is_array()) throw ConfigError(join(path, "members"), "expected an array of sets");
      std::vector<ConstraintSet> members;
      for (std::size_t i = 0; i < ms.size(); ++i)
        members.push_back(set_from_json(ms[i], join(path, "members") + "[" + std::to_string(i) + "]"));
      std::optional<Vector> witness;
      if (j.contains("witness")) witness = as_vector(j["witness"], join(path, "witness"));
      return ConstraintSet::intersection(std::move(members), std::move(witness));
    }
    throw ConfigError(join(path, "kind"), "unknown set kind '" + kind + "'");
  });
}

inline Json to_json(const ConstraintSet& set) {
  return std::visit(
      detail::overloaded{
          [](const sets::FullSpace& s) { return Json{{"kind", "full_space"}, {"dim", s.dim}}; },
          [](const sets::Singleton& s) { return Json{{"kind", "singleton"}, {"point", s.point}}; },
          [](const sets::Box& s) { return Json{{"kind", "box"}, {"lo", s.lo}, {"hi", s.hi}}; },
          [](const sets::Ball& s) { return Json{{"kind", "ball"}, {"center", s.center}, {"radius", s.radius}}; },
          [](const sets::L1Ball& s) { return Json{{"kind", "l1_ball"}, {"center", s.center}, {"radius", s.radius}}; },
          [](const sets::MonotoneCone& s) { return Json{{"kind", "monotone_cone"}, {"dim", s.dim}}; },
          [](const sets::WeightedEllipsoid& s) {
            return Json{{"kind", "weighted_ellipsoid"}, {"weights", s.weights}, {"radius", s.radius}};
          },
          [](const sets::Intersection& s) {
            Json members = Json::array();
            for (const auto& m : s.members) members.push_back(to_json(m));
            Json out{{"kind", "intersection"}, {"members", members}};
            if (s.witness) out["witness"] = *s.witness;
            return out;
          }},
      set.kind());
}

// ── Penalties ───────────────────────────────────────────────────────

inline PenaltySpec penalty_from_json(const Json& j, const std::string& path = "penalty") {
  using namespace io;
  const std::string kind = as_string(require(j, "kind", path), join(path, "kind"));
  auto lambda = [&] {
    const double v = as_number(require(j, "lambda", path), join(path, "lambda"));
    if (!(v >= 0.0)) throw ConfigError(join(path, "lambda"), "must be nonnegative");
    return v;
  };
  return tagged(path, [&] {
    if (kind == "zero") return PenaltySpec::zero();
    if (kind == "l1") return PenaltySpec::l1(lambda());
    if (kind == "range") return PenaltySpec::range(lambda());
    if (kind == "quadratic") return PenaltySpec::quadratic(lambda());
    if (kind == "linear_form") return PenaltySpec::linear_form(as_vector(require(j, "v", path), join(path, "v")));
    throw ConfigError(join(path, "kind"), "unknown penalty kind '" + kind + "'");
  });
}

inline Json to_json(const PenaltySpec& f) {
  return std::visit(detail::overloaded{[](const penalty::Zero&) { return Json{{"kind", "zero"}}; },
                                       [](const penalty::L1& p) { return Json{{"kind", "l1"}, {"lambda", p.lambda}}; },
                                       [](const penalty::Range& p) { return Json{{"kind", "range"}, {"lambda", p.lambda}}; },
                                       [](const penalty::Quadratic& p) {
                                         return Json{{"kind", "quadratic"}, {"lambda", p.lambda}};
                                       },
                                       [](const penalty::LinearForm& p) { return Json{{"kind", "linear_form"}, {"v", p.v}}; }},
                    f.kind());
}

// ── Estimators and priors ───────────────────────────────────────────

/// penalized_lse takes its set and penalty from the enclosing config.
inline EstimatorSpec estimator_from_json(const Json& j, const std::optional<ConstraintSet>& set,
                                         const std::optional<PenaltySpec>& f, const std::string& path = "estimator") {
  using namespace io;
  const std::string kind = as_string(require(j, "kind", path), join(path, "kind"));
  return tagged(path, [&] {
    if (kind == "penalized_lse") {
      if (!set) throw ConfigError("set", "required by the penalized_lse estimator");
      return EstimatorSpec::penalized_lse(*set, f.value_or(PenaltySpec::zero()));
    }
    if (kind == "identity") return EstimatorSpec::identity();
    if (kind == "zero") return EstimatorSpec::zero();
    if (kind == "james_stein") return EstimatorSpec::james_stein();
    if (kind == "clip") return EstimatorSpec::clip(as_number(require(j, "a", path), join(path, "a")));
    throw ConfigError(join(path, "kind"), "unknown estimator kind '" + kind + "'");
  });
}

/// Priors: two_point {p1, p2, w1?, w2?}; grid {points, weights?}; grid_1d
/// {lo, hi, count} (uniform); pushforward {theta_star, rho, batch: {count,
/// seed?}} using the config's set and penalty.
inline PriorSpec prior_from_json(const Json& j, const std::optional<ConstraintSet>& set,
                                 const std::optional<PenaltySpec>& f, std::uint64_t seed,
                                 const SolveOptions& solve = {}, const std::string& path = "prior") {
  using namespace io;
  const std::string kind = as_string(require(j, "kind", path), join(path, "kind"));
  return tagged(path, [&] {
    if (kind == "two_point")
      return PriorSpec::two_point(as_vector(require(j, "p1", path), join(path, "p1")),
                                  as_vector(require(j, "p2", path), join(path, "p2")), number_or(j, "w1", 0.5, path),
                                  number_or(j, "w2", 0.5, path));
    if (kind == "grid") {
      const Json& pts = require(j, "points", path);
      if (!pts.is_array() || pts.empty()) throw ConfigError(join(path, "points"), "expected a nonempty array");
      std::vector<Vector> atoms;
      for (std::size_t i = 0; i < pts.size(); ++i)
        atoms.push_back(as_vector(pts[i], join(path, "points") + "[" + std::to_string(i) + "]"));
      if (!j.contains("weights")) return PriorSpec::uniform_grid(std::move(atoms));
      return PriorSpec::grid(std::move(atoms), as_vector(j["weights"], join(path, "weights")));
    }
    if (kind == "grid_1d") {
      const double lo = as_number(require(j, "lo", path), join(path, "lo"));
      const double hi = as_number(require(j, "hi", path), join(path, "hi"));
      const std::size_t k = as_count(require(j, "count", path), join(path, "count"));
      if (k < 2) throw ConfigError(join(path, "count"), "need at least 2 atoms");
      std::vector<Vector> atoms;
      for (std::size_t i = 0; i < k; ++i)
        atoms.push_back({lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1)});
      return PriorSpec::uniform_grid(std::move(atoms));
    }
    if (kind == "pushforward") {
      if (!set) throw ConfigError("set", "required by the pushforward prior");
      const Json& b = require(j, "batch", path);
      NoiseBatch batch{b.contains("seed") ? as_seed(b["seed"], join(path, "batch.seed")) : derive_seed(seed, "pushforward"),
                       as_count(require(b, "count", join(path, "batch")), join(path, "batch.count")), set->dim()};
      return PriorSpec::pushforward(as_vector(require(j, "theta_star", path), join(path, "theta_star")),
                                    as_number(require(j, "rho", path), join(path, "rho")), *set,
                                    f.value_or(PenaltySpec::zero()), batch, solve);
    }
    throw ConfigError(join(path, "kind"), "unknown prior kind '" + kind + "'");
  });
}

inline SolveOptions solve_options_from_json(const Json& j, const std::string& path = "solver") {
  using namespace io;
  SolveOptions o;
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  o.tol = number_or(j, "tol", o.tol, path);
  o.max_iter = static_cast<int>(count_or(j, "max_iter", static_cast<std::size_t>(o.max_iter), path));
  if (j.contains("path")) {
    const std::string p = as_string(j["path"], join(path, "path"));
    if (p == "automatic") o.path = SolveOptions::Path::automatic;
    else if (p == "proximal_dykstra") o.path = SolveOptions::Path::proximal_dykstra;
    else if (p == "subgradient") o.path = SolveOptions::Path::subgradient;
    else throw ConfigError(join(path, "path"), "unknown solver path '" + p + "'");
  }
  if (j.contains("step")) o.step_rule = StepRule::diminishing(as_number(j["step"], join(path, "step")));
  tagged(path, [&] {
    o.validate();
    return 0;
  });
  return o;
}

// ── Reports ─────────────────────────────────────────────────────────

inline Json to_json(const Solution& s) {
  return Json{{"point", s.point},         {"objective", s.objective}, {"iterations", s.iterations},
              {"residual", s.residual},   {"method", to_string(s.method)}, {"converged", s.converged}};
}

inline Json to_json(const TThetaResult& r) {
  return Json{{"t_theta", r.t_theta}, {"se", r.se},           {"G_at_max", r.G_at_max},
              {"m_at_max", r.m_at_max}, {"m_se", r.m_se},     {"bracket", {r.lo, r.hi}},
              {"t_max", r.t_max},     {"evaluations", r.evaluations}, {"failures", r.failures}};
}

inline Json to_json(const WidthProfile& p) {
  return Json{{"theta", p.theta}, {"tgrid", p.tgrid}, {"m_hat", p.m_hat}, {"se", p.se},
              {"batch", {{"seed", p.batch.seed}, {"count", p.batch.count}}}, {"failures", p.failures}};
}

inline Json to_json(const WidthShapeReport& r) {
  return Json{{"tgrid", r.tgrid},
              {"m_hat", r.m_hat},
              {"ttheta", to_json(r.ttheta)},
              {"monotone_violation", r.monotone_violation},
              {"concavity_violation", r.concavity_violation},
              {"tangent_violation", r.tangent_violation},
              {"strong_concavity_violation", r.strong_concavity_violation},
              {"shape_tol", r.shape_tol},
              {"search_slack", r.search_slack},
              {"failures", r.failures},
              {"pass", r.pass}};
}

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline Json to_json(const RiskReport& r) {
  return Json{{"estimator", r.estimator},     {"theta", r.theta},
              {"mean_sq_loss", r.mean_sq_loss}, {"stderr", r.se},
              {"reps", r.reps},               {"failures", r.failures},
              {"t_theta_hat", optional_json(r.t_theta_hat)}, {"t_theta_stderr", r.t_theta_se},
              {"bound_1co", optional_json(r.bound_1co)},     {"combined_stderr", r.combined_se},
              {"pass", r.pass}};
}

inline Json to_json(const TailReport& r) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < r.deltas.size(); ++i)
    rows.push_back({{"delta", r.deltas[i]},
                    {"empirical", r.empirical[i]},
                    {"binomial_stderr", r.binomial_se[i]},
                    {"bound", r.bounds[i]},
                    {"slack_bound", r.slack_bounds[i]},
                    {"informative", static_cast<bool>(r.informative[i])},
                    {"pass", static_cast<bool>(r.delta_pass[i])}});
  return Json{{"theta", r.theta},       {"t_theta_hat", r.t_theta_hat}, {"t_theta_stderr", r.t_theta_se},
              {"reps", r.reps},         {"failures", r.failures},       {"deltas", rows},
              {"pass", r.pass}};
}

inline Json to_json(const SmoothnessReport& r) {
  return Json{{"theta1", r.theta1},
              {"theta2", r.theta2},
              {"distance", r.distance},
              {"reps", r.reps},
              {"failures", r.failures},
              {"risk1", r.risk1},
              {"risk2", r.risk2},
              {"paired_excess", r.paired_excess},
              {"paired_stderr", r.paired_se},
              {"risk_pass", r.risk_pass},
              {"t1", r.t1},
              {"t1_stderr", r.t1_se},
              {"t2", r.t2},
              {"t2_stderr", r.t2_se},
              {"interval", {r.interval_lo, r.interval_hi}},
              {"ttheta_pass", r.ttheta_pass},
              {"pass", r.pass}};
}

inline Json to_json(const BoundReport& r) {
  Json j{{"method", r.method}, {"value", r.value}};
  if (r.method == "lecam") {
    j["distance"] = r.distance;
    j["tv_bound"] = r.tv_bound;
  } else {
    j["information"] = r.information;
    j["mass_threshold"] = r.mass_threshold;
    j["t"] = std::isfinite(r.t) ? Json(r.t) : Json(nullptr);
    j["best_candidate"] = r.best_candidate;
    j["candidates"] = r.candidates;
  }
  return j;
}

inline Json to_json(const AverageRisk& r) {
  return Json{{"mean", r.mean}, {"stderr", r.se}, {"reps", r.reps}, {"failures", r.failures}, {"pass", r.pass}};
}

inline Json to_json(const RatioBound& r) {
  return Json{{"a", r.a}, {"sup_ratio", r.sup_ratio}, {"argmax_theta", r.argmax_theta}, {"bound", r.bound},
              {"holds", r.holds}};
}

inline Json to_json(const CertificateReport& r) {
  return Json{{"constants", {{"rho", r.constants.rho}, {"beta", r.constants.beta}, {"eta", r.constants.eta}, {"b", r.constants.b}}},
              {"hard_constant", r.hard_constant},
              {"easy_constant", r.easy.formula},
              {"easy_minimum", r.easy.minimum},
              {"sufficiency_rhs", std::isfinite(r.sufficiency.rhs) ? Json(r.sufficiency.rhs) : Json(nullptr)},
              {"b_squared", r.sufficiency.b_squared},
              {"holds", r.sufficiency.holds},
              {"diagnostic", r.sufficiency.diagnostic},
              {"cstar_lower", r.cstar_lower},
              {"cstar_upper_demo", r.cstar_upper_demo},
              {"upper_demo", to_json(r.upper_demo)}};
}

// ── Files ───────────────────────────────────────────────────────────

inline Json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("", "cannot open " + p.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", p.string() + ": malformed JSON (" + e.what() + ")");
  }
}

/// Writes through a temporary sibling and renames over the target.
inline void write_file_atomic(const std::filesystem::path& p, const std::string& content) {
  namespace fs = std::filesystem;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

/// RFC-4180-style CSV: quote cells holding commas, quotes or newlines.
inline std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  auto cell = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << cell(r[i]);
    out << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

/// Shortest round-trip representation, matching the JSON dump.
inline std::string format_number(double v) { return Json(v).dump(); }

}  // namespace seqlab

#endif  // SEQLAB_IO_HPP
