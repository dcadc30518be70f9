#include "foldctl/scenario.h"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include "foldctl/errors.h"
#include "json.hpp"

namespace foldctl {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw ScenarioError(ScenarioError::Kind::kSchema, (path.empty() ? "/" : path) + ": " + what);
}

[[noreturn]] void invariant_error(const std::string& path, const std::string& what) {
  throw ScenarioError(ScenarioError::Kind::kInvariant,
                      (path.empty() ? "/" : path) + ": " + what);
}

std::string type_name(const json& j) { return j.type_name(); }

// A JSON value together with its pointer from the document root.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const json& value() const { return j_; }
  const std::string& path() const { return path_; }

  void expect_object(std::initializer_list<std::string_view> allowed) const {
    if (!j_.is_object()) schema_error(path_, "expected an object, got " + type_name(j_));
    for (const auto& [key, _] : j_.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        schema_error(path_ + "/" + key, "unknown key");
      }
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  Node at(const std::string& key) const {
    if (!j_.contains(key)) schema_error(path_ + "/" + key, "missing required key");
    return {j_.at(key), path_ + "/" + key};
  }

  Node at(size_t i) const { return {j_.at(i), path_ + "/" + std::to_string(i)}; }

  size_t array_size() const {
    if (!j_.is_array()) schema_error(path_, "expected an array, got " + type_name(j_));
    return j_.size();
  }

  size_t array_size(size_t expected) const {
    const size_t n = array_size();
    if (n != expected) {
      schema_error(path_, "expected " + std::to_string(expected) + " entries, got " +
                              std::to_string(n));
    }
    return n;
  }

  double number() const {
    if (!j_.is_number()) schema_error(path_, "expected a number, got " + type_name(j_));
    return j_.get<double>();
  }

  long long integer() const {
    if (!j_.is_number_integer()) schema_error(path_, "expected an integer, got " + type_name(j_));
    return j_.get<long long>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) schema_error(path_, "expected a boolean, got " + type_name(j_));
    return j_.get<bool>();
  }

  std::string string() const {
    if (!j_.is_string()) schema_error(path_, "expected a string, got " + type_name(j_));
    return j_.get<std::string>();
  }

  std::string choice(std::initializer_list<std::string_view> options) const {
    std::string s = string();
    if (std::find(options.begin(), options.end(), s) == options.end()) {
      std::string list;
      for (auto o : options) list += (list.empty() ? "" : ", ") + std::string(o);
      schema_error(path_, "expected one of {" + list + "}, got '" + s + "'");
    }
    return s;
  }

  Eigen::VectorXd vector(size_t n) const {
    array_size(n);
    Eigen::VectorXd v(n);
    for (size_t i = 0; i < n; ++i) v[i] = at(i).number();
    return v;
  }

  std::vector<double> numbers() const {
    std::vector<double> out(array_size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = at(i).number();
    return out;
  }

  Eigen::MatrixXd matrix(size_t rows, size_t cols) const {
    array_size(rows);
    Eigen::MatrixXd M(rows, cols);
    for (size_t i = 0; i < rows; ++i) M.row(i) = at(i).vector(cols).transpose();
    return M;
  }

 private:
  const json& j_;
  std::string path_;
};

double positive(const Node& n) {
  const double v = n.number();
  if (!(v > 0.0)) schema_error(n.path(), "must be positive");
  return v;
}

size_t count(const Node& n, long long min = 0) {
  const long long v = n.integer();
  if (v < min) schema_error(n.path(), "must be at least " + std::to_string(min));
  return static_cast<size_t>(v);
}

std::vector<Monomial> parse_terms(const Node& n, int num_vars) {
  std::vector<Monomial> terms;
  const size_t size = n.array_size();
  for (size_t t = 0; t < size; ++t) {
    const Node term = n.at(t);
    term.expect_object({"coeff", "exponents"});
    Monomial mono;
    mono.coeff = term.at("coeff").number();
    const Node ex = term.at("exponents");
    ex.array_size(num_vars);
    for (int v = 0; v < num_vars; ++v) {
      const long long e = ex.at(v).integer();
      if (e < 0) schema_error(ex.at(v).path(), "exponents must be non-negative");
      mono.exponents.push_back(static_cast<int>(e));
    }
    terms.push_back(std::move(mono));
  }
  return terms;
}

// A plain number is shorthand for a constant polynomial.
Polynomial parse_polynomial(const Node& n, int num_vars) {
  if (n.value().is_number()) return Polynomial::constant(num_vars, n.number());
  return Polynomial(num_vars, parse_terms(n, num_vars));
}

FoldSFCS parse_system(const Node& n) {
  n.expect_object({"n_s", "m", "A", "L1", "L2", "B", "F"});
  const int n_s = static_cast<int>(count(n.at("n_s"), 1));
  const int m = static_cast<int>(count(n.at("m"), 1));
  const int nv = n_s + 2;
  const Eigen::VectorXd A = n.at("A").vector(n_s);
  const Eigen::MatrixXd L1 =
      n.has("L1") ? n.at("L1").matrix(n_s, n_s) : Eigen::MatrixXd::Zero(n_s, n_s);
  const Eigen::VectorXd L2 = n.has("L2") ? n.at("L2").vector(n_s) : Eigen::VectorXd::Zero(n_s);

  const Node b = n.at("B");
  b.array_size(n_s);
  std::vector<Polynomial> entries;
  for (int i = 0; i < n_s; ++i) {
    const Node row = b.at(i);
    row.array_size(m);
    for (int k = 0; k < m; ++k) entries.push_back(parse_polynomial(row.at(k), nv));
  }

  PolyMap F = PolyMap::zero(nv, n_s);
  if (n.has("F")) {
    const Node f = n.at("F");
    if (f.array_size() != 0) {
      f.array_size(n_s);
      std::vector<Polynomial> comps;
      for (int i = 0; i < n_s; ++i) comps.emplace_back(nv, parse_terms(f.at(i), nv));
      F = PolyMap(nv, std::move(comps));
    }
  }

  try {
    return FoldSFCS(n_s, m, A, L1, L2, PolyMap(nv, std::move(entries)), std::move(F));
  } catch (const InvariantError& e) {
    invariant_error(n.path(), e.what());
  } catch (const RankError& e) {
    invariant_error(n.path(), e.what());
  } catch (const DimensionError& e) {
    schema_error(n.path(), e.what());
  }
}

void parse_controller(const Node& n, Scenario& s) {
  n.expect_object({"c", "k", "k_rest", "mode"});
  const int n_s = s.system.n_s();
  BackstepGains gains;
  gains.c = n.has("c") ? n.at("c").number() : 1.0;
  gains.k = n.has("k") ? n.at("k").number() : 1.0;
  gains.k_rest = n.has("k_rest") ? n.at("k_rest").vector(n_s - 1)
                                 : Eigen::VectorXd::Ones(n_s - 1);
  if (n.has("mode")) {
    s.mode = control_mode_from_string(n.at("mode").choice({"exact", "nominal"}));
  }
  try {
    gains.validate(n_s);
  } catch (const InvariantError& e) {
    invariant_error(n.path(), e.what());
  }
  s.gains = std::move(gains);
}

void parse_initial_conditions(const Node& n, Scenario& s) {
  n.expect_object({"frame", "points", "random"});
  const int n_s = s.system.n_s();
  IcFrame frame = IcFrame::kBlownUp;
  if (n.has("frame")) {
    frame = n.at("frame").choice({"blown-up", "original"}) == "original" ? IcFrame::kOriginal
                                                                           : IcFrame::kBlownUp;
  }
  if (n.has("points")) {
    const Node pts = n.at("points");
    for (size_t i = 0; i < pts.array_size(); ++i) {
      s.initial_conditions.push_back({frame, pts.at(i).vector(n_s + 1)});
    }
  }
  if (n.has("random")) {
    const Node r = n.at("random");
    r.expect_object({"count", "radius", "seed"});
    RandomIcSpec spec;
    if (r.has("count")) spec.count = static_cast<int>(count(r.at("count")));
    if (r.has("radius")) spec.radius = positive(r.at("radius"));
    if (r.has("seed")) spec.seed = count(r.at("seed"));
    for (auto ic : ball_initial_conditions(n_s, spec.count, spec.radius, spec.seed)) {
      ic.frame = frame;
      s.initial_conditions.push_back(std::move(ic));
    }
    s.random_ics = spec;
  }
}

std::optional<double> optional_radius(const Node& n) {
  if (n.value().is_null()) return std::nullopt;
  return positive(n);
}

void parse_simulation(const Node& n, Scenario& s) {
  n.expect_object({"closed_loop", "method", "step", "horizon", "time_scale", "rtol", "atol",
                   "min_step", "max_step", "ball_radius", "escape_radius", "norm",
                   "lyapunov_ball", "write_trajectories", "parallel"});
  SimulationSpec& sim = s.simulation;
  IntegratorConfig& cfg = sim.sweep.integrator;
  if (n.has("closed_loop")) sim.closed_loop = n.at("closed_loop").boolean();
  if (n.has("method")) {
    cfg.method = integration_method_from_string(n.at("method").choice({"rk4", "rkf45"}));
  }
  if (n.has("step")) cfg.step = n.at("step").number();
  if (n.has("horizon")) cfg.horizon = n.at("horizon").number();
  if (n.has("rtol")) cfg.rtol = n.at("rtol").number();
  if (n.has("atol")) cfg.atol = n.at("atol").number();
  if (n.has("min_step")) cfg.min_step = n.at("min_step").number();
  if (n.has("max_step")) cfg.max_step = n.at("max_step").number();
  if (n.has("ball_radius")) cfg.ball_radius = optional_radius(n.at("ball_radius"));
  if (n.has("escape_radius")) cfg.escape_radius = optional_radius(n.at("escape_radius"));
  if (n.has("time_scale")) {
    sim.sweep.desingularized_time =
        n.at("time_scale").choice({"desingularized", "fast"}) == "desingularized";
  }
  if (n.has("norm")) {
    sim.sweep.norm = n.at("norm").choice({"blown-up", "original"}) == "original"
                         ? NormFrame::kOriginal
                         : NormFrame::kBlownUp;
  }
  if (n.has("lyapunov_ball")) sim.sweep.lyapunov_ball = n.at("lyapunov_ball").number();
  if (n.has("write_trajectories")) sim.write_trajectories = n.at("write_trajectories").boolean();
  if (n.has("parallel")) sim.sweep.parallel = n.at("parallel").boolean();
  try {
    cfg.validate();
  } catch (const InvariantError& e) {
    invariant_error(n.path(), e.what());
  }
}

void parse_analyze(const Node& n, Scenario& s) {
  n.expect_object({"points", "tol", "baseline"});
  const int n_s = s.system.n_s();
  AnalyzeSpec& a = s.analyze;
  if (n.has("points")) {
    const Node pts = n.at("points");
    for (size_t i = 0; i < pts.array_size(); ++i) a.points.push_back(pts.at(i).vector(n_s + 1));
  }
  if (n.has("tol")) a.tol = positive(n.at("tol"));
  if (n.has("baseline")) {
    const Node b = n.at("baseline");
    b.expect_object({"x_start", "x_end", "samples", "z_seed", "operating_point",
                     "reduced_rate", "fast_gain", "tol"});
    BaselineSpec spec;
    spec.branch.x_start = b.at("x_start").vector(n_s);
    spec.branch.x_end = b.at("x_end").vector(n_s);
    if (b.has("samples")) spec.branch.samples = static_cast<int>(count(b.at("samples"), 2));
    if (b.has("z_seed")) spec.branch.z_seed = b.at("z_seed").number();
    if (b.has("operating_point")) spec.branch.operating_point = b.at("operating_point").vector(n_s);
    if (b.has("reduced_rate")) spec.gains.reduced_rate = positive(b.at("reduced_rate"));
    if (b.has("fast_gain")) spec.gains.fast_gain = b.at("fast_gain").vector(s.system.m());
    spec.gains.tol = b.has("tol") ? positive(b.at("tol")) : a.tol;
    a.baseline = std::move(spec);
  }
}

void parse_verify(const Node& n, Scenario& s) {
  n.expect_object({"seed", "samples", "grid_points", "grid_r_min", "grid_r_max", "grid_rho_max",
                   "grid_tol", "conjugacy_rho", "conjugacy_horizon", "conjugacy_step",
                   "conjugacy_tol", "negative_control_rho", "roundtrip_tol", "factor_tol",
                   "quasi_degree_instances"});
  VerifySpec& v = s.verify;
  if (n.has("seed")) v.seed = count(n.at("seed"));
  if (n.has("samples")) v.samples = count(n.at("samples"), 1);
  if (n.has("grid_points")) v.grid_points = count(n.at("grid_points"), 1);
  if (n.has("grid_r_min")) v.grid_r_min = positive(n.at("grid_r_min"));
  if (n.has("grid_r_max")) v.grid_r_max = positive(n.at("grid_r_max"));
  if (n.has("grid_rho_max")) v.grid_rho_max = n.at("grid_rho_max").number();
  if (n.has("grid_tol")) v.grid_tol = positive(n.at("grid_tol"));
  if (n.has("conjugacy_rho")) {
    const Node r = n.at("conjugacy_rho");
    v.conjugacy_rho = r.numbers();
    for (size_t i = 0; i < v.conjugacy_rho.size(); ++i) positive(r.at(i));
  }
  if (n.has("conjugacy_horizon")) v.conjugacy_horizon = n.at("conjugacy_horizon").number();
  if (n.has("conjugacy_step")) v.conjugacy_step = positive(n.at("conjugacy_step"));
  if (n.has("conjugacy_tol")) v.conjugacy_tol = positive(n.at("conjugacy_tol"));
  if (n.has("negative_control_rho")) {
    v.negative_control_rho = positive(n.at("negative_control_rho"));
  }
  if (n.has("roundtrip_tol")) v.roundtrip_tol = positive(n.at("roundtrip_tol"));
  if (n.has("factor_tol")) v.factor_tol = positive(n.at("factor_tol"));
  if (n.has("quasi_degree_instances")) {
    v.quasi_degree_instances = count(n.at("quasi_degree_instances"), 1);
  }
  if (v.grid_r_max < v.grid_r_min) schema_error(n.path(), "grid_r_max must be >= grid_r_min");
  if (v.grid_rho_max < 0.0) schema_error(n.path() + "/grid_rho_max", "must be non-negative");
  if (v.conjugacy_horizon < 0.0) {
    schema_error(n.path() + "/conjugacy_horizon", "must be non-negative");
  }
}

std::string locate(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  const auto begin = text.begin();
  const auto end = begin + static_cast<std::ptrdiff_t>(byte);
  const long line = 1 + std::count(begin, end, '\n');
  const auto last_newline = std::find(std::make_reverse_iterator(end),
                                      std::make_reverse_iterator(begin), '\n');
  const long column = std::distance(last_newline.base(), end);
  return "line " + std::to_string(line) + ", column " + std::to_string(std::max(1L, column));
}

}  // namespace

Scenario parse_scenario_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string what = e.what();
    if (auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
    throw ScenarioError(ScenarioError::Kind::kSchema, locate(text, e.byte) + ": " + what);
  }
  const Node root(doc, "");
  root.expect_object({"name", "system", "controller", "eps", "initial_conditions", "simulation",
                      "analyze", "verify", "output"});

  Scenario s(parse_system(root.at("system")));
  if (root.has("name")) s.name = root.at("name").string();
  if (root.has("controller")) parse_controller(root.at("controller"), s);
  if (root.has("eps")) {
    const Node eps = root.at("eps");
    s.eps = eps.numbers();
    for (size_t i = 0; i < s.eps.size(); ++i) {
      if (!(s.eps[i] > 0.0)) invariant_error(eps.at(i).path(), "eps must be strictly positive");
    }
  }
  if (root.has("initial_conditions")) parse_initial_conditions(root.at("initial_conditions"), s);
  if (root.has("simulation")) parse_simulation(root.at("simulation"), s);
  if (root.has("analyze")) parse_analyze(root.at("analyze"), s);
  if (root.has("verify")) parse_verify(root.at("verify"), s);
  if (root.has("output")) {
    const Node out = root.at("output");
    out.expect_object({"dir"});
    if (out.has("dir")) s.output_dir = out.at("dir").string();
  }
  return s;
}

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in || std::filesystem::is_directory(path)) {
    throw ScenarioError(ScenarioError::Kind::kMissingFile,
                        "cannot open scenario file '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_string(buffer.str());
}

}  // namespace foldctl
