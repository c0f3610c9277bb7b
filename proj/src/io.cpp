#include "ioc_eiv/io.hpp"

#include "ioc_eiv/error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace ioc_eiv::io {

namespace {

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

const json& require(const json& j, const std::string& path, const std::string& key) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(child(path, key), "missing");
  return *it;
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }))
      throw SchemaError(child(path, it.key()), "unknown key");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw SchemaError(path, "expected an integer");
  return j.get<long long>();
}

std::uint64_t unsigned_integer(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
  throw SchemaError(path, "expected a nonnegative integer");
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

double number_or(const json& j, const std::string& path, const char* key, double fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, child(path, key));
}

int int_or(const json& j, const std::string& path, const char* key, int fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : static_cast<int>(integer(*it, child(path, key)));
}

json optional_vector(const std::optional<Vector>& v) { return v ? to_json(*v) : json(nullptr); }
json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<Vector> read_optional_vector(const json& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  return vector_from_json(j, path);
}

std::optional<double> read_optional_number(const json& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  return number(j, path);
}

void check_format(const json& j, const char* format) {
  if (string(require(j, "", "format"), "/format") != format)
    throw SchemaError("/format", std::string("expected \"") + format + "\"");
  if (integer(require(j, "", "version"), "/version") != 1) throw SchemaError("/version", "unsupported version");
}

}  // namespace

json to_json(const Matrix& m) {
  json data = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    data.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j, const std::string& path) {
  check_keys(j, path, {"rows", "cols", "data"});
  const long long rows = integer(require(j, path, "rows"), child(path, "rows"));
  const long long cols = integer(require(j, path, "cols"), child(path, "cols"));
  if (rows < 0 || cols < 0) throw SchemaError(path, "negative dimension");
  const json& data = require(j, path, "data");
  const std::string dpath = child(path, "data");
  if (!data.is_array() || static_cast<long long>(data.size()) != rows)
    throw SchemaError(dpath, "expected " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (long long r = 0; r < rows; ++r) {
    const json& row = data[static_cast<std::size_t>(r)];
    const std::string rpath = child(dpath, static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<long long>(row.size()) != cols)
      throw SchemaError(rpath, "expected " + std::to_string(cols) + " columns");
    for (long long c = 0; c < cols; ++c)
      m(r, c) = number(row[static_cast<std::size_t>(c)], child(rpath, static_cast<std::size_t>(c)));
  }
  return m;
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i], child(path, i));
  return v;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

// ---------------------------------------------------------------------------

void validate_problem_json(const json& j, const std::string& path) {
  check_keys(j, path, {"description", "dynamics", "features", "append_input_features", "constraints", "horizon", "x0",
                       "theta_true"});
  const json& dyn = require(j, path, "dynamics");
  const std::string dpath = child(path, "dynamics");
  const std::string type = string(require(dyn, dpath, "type"), child(dpath, "type"));
  if (type == "discrete") {
    check_keys(dyn, dpath, {"type", "A", "B"});
    matrix_from_json(require(dyn, dpath, "A"), child(dpath, "A"));
    matrix_from_json(require(dyn, dpath, "B"), child(dpath, "B"));
  } else if (type == "backward_euler") {
    check_keys(dyn, dpath, {"type", "Ac", "Bc", "Ts"});
    matrix_from_json(require(dyn, dpath, "Ac"), child(dpath, "Ac"));
    matrix_from_json(require(dyn, dpath, "Bc"), child(dpath, "Bc"));
    if (!(number(require(dyn, dpath, "Ts"), child(dpath, "Ts")) > 0.0))
      throw SchemaError(child(dpath, "Ts"), "must be positive");
  } else {
    throw SchemaError(child(dpath, "type"), "expected \"discrete\" or \"backward_euler\"");
  }
  const json& feats = require(j, path, "features");
  const std::string fpath = child(path, "features");
  if (!feats.is_array()) throw SchemaError(fpath, "expected an array");
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const std::string p = child(fpath, i);
    check_keys(feats[i], p, {"kind", "index", "target"});
    const std::string kind = string(require(feats[i], p, "kind"), child(p, "kind"));
    if (kind != "state" && kind != "input") throw SchemaError(child(p, "kind"), "expected \"state\" or \"input\"");
    if (integer(require(feats[i], p, "index"), child(p, "index")) < 0)
      throw SchemaError(child(p, "index"), "must be nonnegative");
    if (feats[i].contains("target")) number(feats[i]["target"], child(p, "target"));
  }
  if (j.contains("append_input_features") && !j["append_input_features"].is_boolean())
    throw SchemaError(child(path, "append_input_features"), "expected a boolean");
  if (j.contains("constraints")) {
    const std::string cpath = child(path, "constraints");
    const json& c = j["constraints"];
    check_keys(c, cpath, {"Hx", "Hu", "h"});
    matrix_from_json(require(c, cpath, "Hx"), child(cpath, "Hx"));
    matrix_from_json(require(c, cpath, "Hu"), child(cpath, "Hu"));
    vector_from_json(require(c, cpath, "h"), child(cpath, "h"));
  }
  if (integer(require(j, path, "horizon"), child(path, "horizon")) < 1)
    throw SchemaError(child(path, "horizon"), "must be >= 1");
  vector_from_json(require(j, path, "x0"), child(path, "x0"));
  if (j.contains("theta_true") && !j["theta_true"].is_null())
    vector_from_json(j["theta_true"], child(path, "theta_true"));
}

ForwardProblem problem_from_json(const json& j, const std::string& path) {
  validate_problem_json(j, path);
  const json& dyn = j["dynamics"];
  const std::string dpath = child(path, "dynamics");
  Matrix A, B;
  if (dyn["type"] == "discrete") {
    A = matrix_from_json(dyn["A"], child(dpath, "A"));
    B = matrix_from_json(dyn["B"], child(dpath, "B"));
  } else {
    const Matrix Ac = matrix_from_json(dyn["Ac"], child(dpath, "Ac"));
    const Matrix Bc = matrix_from_json(dyn["Bc"], child(dpath, "Bc"));
    const double ts = dyn["Ts"].get<double>();
    if (Ac.rows() != Ac.cols() || Bc.rows() != Ac.rows()) throw SchemaError(dpath, "Ac/Bc sizes disagree");
    // x_{k+1} = x_k + Ts (Ac x_{k+1} + Bc u_k)
    Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(Ac.rows(), Ac.cols()) - ts * Ac);
    A = lu.inverse();
    B = ts * lu.solve(Bc);
  }
  LinearSystem sys(A, B);

  std::vector<QuadraticFeature> features;
  for (const auto& f : j["features"]) {
    QuadraticFeature q;
    q.kind = f["kind"] == "state" ? FeatureKind::state : FeatureKind::input;
    q.index = f["index"].get<Index>();
    q.target = f.value("target", 0.0);
    features.push_back(q);
  }
  if (j.value("append_input_features", false)) features = with_input_features(std::move(features), sys.m());

  PolytopicConstraints c{Matrix::Zero(0, sys.n()), Matrix::Zero(0, sys.m()), Vector::Zero(0)};
  if (j.contains("constraints")) {
    const std::string cpath = child(path, "constraints");
    c.Hx = matrix_from_json(j["constraints"]["Hx"], child(cpath, "Hx"));
    c.Hu = matrix_from_json(j["constraints"]["Hu"], child(cpath, "Hu"));
    c.h = vector_from_json(j["constraints"]["h"], child(cpath, "h"));
  }
  std::optional<Vector> theta;
  if (j.contains("theta_true") && !j["theta_true"].is_null())
    theta = vector_from_json(j["theta_true"], child(path, "theta_true"));
  try {
    return ForwardProblem(sys, features, c, j["horizon"].get<int>(), vector_from_json(j["x0"], child(path, "x0")),
                          theta);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
}

json problem_to_json(const ForwardProblem& fp) {
  json feats = json::array();
  for (const auto& f : fp.features())
    feats.push_back({{"kind", f.kind == FeatureKind::state ? "state" : "input"}, {"index", f.index}, {"target", f.target}});
  json j = {{"dynamics", {{"type", "discrete"}, {"A", to_json(fp.system().A())}, {"B", to_json(fp.system().B())}}},
            {"features", feats},
            {"append_input_features", false},
            {"constraints",
             {{"Hx", to_json(fp.constraints().Hx)}, {"Hu", to_json(fp.constraints().Hu)}, {"h", to_json(fp.constraints().h)}}},
            {"horizon", fp.horizon()},
            {"x0", to_json(fp.x0())}};
  j["theta_true"] = fp.theta_true() ? to_json(*fp.theta_true()) : json(nullptr);
  return j;
}

std::string problem_id(const ForwardProblem& fp) { return fnv1a_hex(problem_to_json(fp).dump()); }

NormalizationRule normalization_from_json(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "value", "index"});
  const std::string kind = string(require(j, path, "kind"), child(path, "kind"));
  const double value = number(require(j, path, "value"), child(path, "value"));
  if (kind == "sum") return NormalizationRule::sum(value);
  if (kind == "component")
    return NormalizationRule::fixed_component(static_cast<Index>(integer(require(j, path, "index"), child(path, "index"))),
                                              value);
  throw SchemaError(child(path, "kind"), "expected \"sum\" or \"component\"");
}

json to_json(const NormalizationRule& rule) {
  if (rule.kind == NormalizationRule::Kind::sum) return {{"kind", "sum"}, {"value", rule.value}};
  return {{"kind", "component"}, {"index", rule.component}, {"value", rule.value}};
}

NoiseConfig noise_config_from_json(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "levels", "seed", "lower", "upper"});
  NoiseConfig nc;
  try {
    nc.kind = noise_kind_from_string(string(require(j, path, "kind"), child(path, "kind")));
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(child(path, "kind"), e.what());
  }
  const json& levels = require(j, path, "levels");
  if (!levels.is_array() || levels.empty()) throw SchemaError(child(path, "levels"), "expected a nonempty array");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double l = number(levels[i], child(child(path, "levels"), i));
    if (!(l > 0.0)) throw SchemaError(child(child(path, "levels"), i), "level must be positive");
    nc.levels.push_back(l);
  }
  if (j.contains("seed")) nc.seed = unsigned_integer(j["seed"], child(path, "seed"));
  if (nc.kind == NoiseSpec::Kind::truncated_gaussian) {
    nc.lower = vector_from_json(require(j, path, "lower"), child(path, "lower"));
    nc.upper = vector_from_json(require(j, path, "upper"), child(path, "upper"));
  }
  return nc;
}

NoiseSpec noise_at_level(const NoiseConfig& nc, const Vector& U_star, Index channels, double pct, std::uint64_t seed) {
  const Vector sigma = noise_scale_from_percent(U_star, pct, channels);
  switch (nc.kind) {
    case NoiseSpec::Kind::gaussian:
      return NoiseSpec::gaussian(sigma.array().square().matrix().asDiagonal(), seed);
    case NoiseSpec::Kind::truncated_gaussian:
      return NoiseSpec::truncated_gaussian(sigma.array().square().matrix().asDiagonal(), nc.lower, nc.upper, seed);
    case NoiseSpec::Kind::uniform:
      return NoiseSpec::uniform(sigma * std::sqrt(3.0), seed);
  }
  throw Error("unknown noise kind");
}

map::MapConfig map_config_from_json(const json& j, const std::string& path, NormalizationRule norm) {
  map::MapConfig c;
  c.norm = norm;
  if (j.is_null()) return c;
  check_keys(j, path, {"max_outer_iters", "cost_tol", "active_tol", "sigma_y", "gibbs"});
  c.max_outer_iters = int_or(j, path, "max_outer_iters", c.max_outer_iters);
  c.cost_tol = number_or(j, path, "cost_tol", c.cost_tol);
  c.active_tol = number_or(j, path, "active_tol", c.active_tol);
  c.sigma_y = number_or(j, path, "sigma_y", c.sigma_y);
  if (j.contains("gibbs")) {
    const std::string gp = child(path, "gibbs");
    check_keys(j["gibbs"], gp, {"n_iter", "n_keep"});
    c.gibbs.n_iter = int_or(j["gibbs"], gp, "n_iter", c.gibbs.n_iter);
    c.gibbs.n_keep = int_or(j["gibbs"], gp, "n_keep", c.gibbs.n_keep);
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
  return c;
}

tls::TlsConfig tls_config_from_json(const json& j, const std::string& path, NormalizationRule norm) {
  tls::TlsConfig c;
  c.norm = norm;
  if (j.is_null()) return c;
  check_keys(j, path, {"max_outer_iters", "sigma_tol", "ridge", "penalty_weights", "floor_fraction", "inner"});
  c.max_outer_iters = int_or(j, path, "max_outer_iters", c.max_outer_iters);
  c.sigma_tol = number_or(j, path, "sigma_tol", c.sigma_tol);
  c.ridge = number_or(j, path, "ridge", c.ridge);
  c.floor_fraction = number_or(j, path, "floor_fraction", c.floor_fraction);
  if (j.contains("penalty_weights")) {
    const Vector w = vector_from_json(j["penalty_weights"], child(path, "penalty_weights"));
    c.penalty_weights.assign(w.data(), w.data() + w.size());
  }
  if (j.contains("inner")) {
    const std::string ip = child(path, "inner");
    check_keys(j["inner"], ip, {"max_iters", "cost_tol", "active_tol", "stationarity_tol"});
    c.inner.max_iters = int_or(j["inner"], ip, "max_iters", c.inner.max_iters);
    c.inner.cost_tol = number_or(j["inner"], ip, "cost_tol", c.inner.cost_tol);
    c.inner.active_tol = number_or(j["inner"], ip, "active_tol", c.inner.active_tol);
    c.inner.stationarity_tol = number_or(j["inner"], ip, "stationarity_tol", c.inner.stationarity_tol);
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
  return c;
}

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"kkt", "map", "tls", "mean"};
  return m;
}

Config config_from_json(const json& j) {
  check_keys(j, "", {"description", "problem", "noise", "demos", "reps", "methods", "normalization", "map", "tls",
                     "output"});
  ForwardProblem fp = problem_from_json(require(j, "", "problem"), "/problem");
  NormalizationRule norm = NormalizationRule::sum(fp.theta_true() ? fp.theta_true()->lpNorm<1>() : 1.0);
  if (j.contains("normalization")) norm = normalization_from_json(j["normalization"], "/normalization");
  Config c{j,
           std::move(fp),
           {},
           10,
           10,
           {"kkt", "map", "tls", "mean"},
           norm,
           map::MapConfig{},
           tls::TlsConfig{},
           "out"};
  if (j.contains("noise")) {
    c.noise = noise_config_from_json(j["noise"], "/noise");
  } else {
    c.noise.levels = {10.0};
  }
  c.demo_count = int_or(j, "", "demos", c.demo_count);
  if (c.demo_count < 1) throw SchemaError("/demos", "must be >= 1");
  c.reps = int_or(j, "", "reps", c.reps);
  if (c.reps < 1) throw SchemaError("/reps", "must be >= 1");
  if (j.contains("methods")) {
    const json& m = j["methods"];
    if (!m.is_array() || m.empty()) throw SchemaError("/methods", "expected a nonempty array");
    c.methods.clear();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string name = string(m[i], child("/methods", i));
      const auto& known = known_methods();
      if (std::find(known.begin(), known.end(), name) == known.end())
        throw SchemaError(child("/methods", i), "unknown method \"" + name + "\"");
      c.methods.push_back(name);
    }
  }
  c.map = map_config_from_json(j.value("map", json(nullptr)), "/map", norm);
  c.tls = tls_config_from_json(j.value("tls", json(nullptr)), "/tls", norm);
  if (j.contains("output")) c.output = string(j["output"], "/output");
  return c;
}

Config load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------

json demo_set_to_json(const DemoSet& ds, const std::optional<json>& noise) {
  json demos = json::array();
  for (const auto& d : ds.demos) demos.push_back(to_json(d));
  json j = {{"format", "ioc-eiv/demos"},
            {"version", 1},
            {"problem_id", ds.problem_id},
            {"count", ds.count()},
            {"length", ds.length()},
            {"x0", to_json(ds.x0)}};
  j["U_star"] = ds.U_star ? to_json(*ds.U_star) : json(nullptr);
  j["noise"] = noise ? *noise : json(nullptr);
  j["demos"] = std::move(demos);
  return j;
}

void validate_demo_set_json(const json& j) {
  check_keys(j, "", {"format", "version", "problem_id", "count", "length", "x0", "U_star", "noise", "demos"});
  check_format(j, "ioc-eiv/demos");
  string(require(j, "", "problem_id"), "/problem_id");
  const long long count = integer(require(j, "", "count"), "/count");
  const long long length = integer(require(j, "", "length"), "/length");
  vector_from_json(require(j, "", "x0"), "/x0");
  const json& demos = require(j, "", "demos");
  if (!demos.is_array() || static_cast<long long>(demos.size()) != count)
    throw SchemaError("/demos", "expected " + std::to_string(count) + " demonstrations");
  for (std::size_t d = 0; d < demos.size(); ++d) {
    if (vector_from_json(demos[d], child("/demos", d)).size() != length)
      throw SchemaError(child("/demos", d), "expected length " + std::to_string(length));
  }
  const json& us = require(j, "", "U_star");
  if (!us.is_null() && vector_from_json(us, "/U_star").size() != length)
    throw SchemaError("/U_star", "expected length " + std::to_string(length));
  const json& noise = require(j, "", "noise");
  if (!noise.is_null() && !noise.is_object()) throw SchemaError("/noise", "expected an object or null");
}

DemoSet demo_set_from_json(const json& j) {
  validate_demo_set_json(j);
  DemoSet ds;
  ds.problem_id = j["problem_id"].get<std::string>();
  ds.x0 = vector_from_json(j["x0"], "/x0");
  for (std::size_t d = 0; d < j["demos"].size(); ++d) ds.demos.push_back(vector_from_json(j["demos"][d], child("/demos", d)));
  if (!j["U_star"].is_null()) ds.U_star = vector_from_json(j["U_star"], "/U_star");
  return ds;
}

json to_json(const EstimateReport& r) {
  json j = {{"format", "ioc-eiv/estimate"}, {"version", 1}, {"method", r.method}, {"problem_id", r.problem_id}};
  j["theta"] = optional_vector(r.theta);
  j["theta_rescaled"] = optional_vector(r.theta_rescaled);
  j["lambda"] = optional_vector(r.lambda);
  j["U_hat"] = optional_vector(r.U_hat);
  j["Sigma_U"] = r.Sigma_U ? to_json(*r.Sigma_U) : json(nullptr);
  j["rmse_theta"] = optional_number(r.rmse_theta);
  j["rmse_U"] = optional_number(r.rmse_U);
  j["rmse_U_mean"] = optional_number(r.rmse_U_mean);
  j["traces"] = r.traces;
  j["notes"] = r.notes;
  return j;
}

void validate_report_json(const json& j) {
  check_keys(j, "", {"format", "version", "method", "problem_id", "theta", "theta_rescaled", "lambda", "U_hat",
                     "Sigma_U", "rmse_theta", "rmse_U", "rmse_U_mean", "traces", "notes"});
  check_format(j, "ioc-eiv/estimate");
  const std::string method = string(require(j, "", "method"), "/method");
  const auto& known = known_methods();
  if (std::find(known.begin(), known.end(), method) == known.end()) throw SchemaError("/method", "unknown method");
  string(require(j, "", "problem_id"), "/problem_id");
  for (const char* key : {"theta", "theta_rescaled", "lambda", "U_hat"}) {
    const json& v = require(j, "", key);
    if (!v.is_null()) vector_from_json(v, std::string("/") + key);
  }
  const json& s = require(j, "", "Sigma_U");
  if (!s.is_null()) matrix_from_json(s, "/Sigma_U");
  for (const char* key : {"rmse_theta", "rmse_U", "rmse_U_mean"}) {
    const json& v = require(j, "", key);
    if (!v.is_null() && !(number(v, std::string("/") + key) >= 0.0))
      throw SchemaError(std::string("/") + key, "must be nonnegative");
  }
  if (!require(j, "", "traces").is_object()) throw SchemaError("/traces", "expected an object");
  const json& notes = require(j, "", "notes");
  if (!notes.is_array()) throw SchemaError("/notes", "expected an array");
  for (std::size_t i = 0; i < notes.size(); ++i) string(notes[i], child("/notes", i));
}

EstimateReport report_from_json(const json& j) {
  validate_report_json(j);
  EstimateReport r;
  r.method = j["method"].get<std::string>();
  r.problem_id = j["problem_id"].get<std::string>();
  r.theta = read_optional_vector(j["theta"], "/theta");
  r.theta_rescaled = read_optional_vector(j["theta_rescaled"], "/theta_rescaled");
  r.lambda = read_optional_vector(j["lambda"], "/lambda");
  r.U_hat = read_optional_vector(j["U_hat"], "/U_hat");
  if (!j["Sigma_U"].is_null()) r.Sigma_U = matrix_from_json(j["Sigma_U"], "/Sigma_U");
  r.rmse_theta = read_optional_number(j["rmse_theta"], "/rmse_theta");
  r.rmse_U = read_optional_number(j["rmse_U"], "/rmse_U");
  r.rmse_U_mean = read_optional_number(j["rmse_U_mean"], "/rmse_U_mean");
  r.traces = j["traces"];
  r.notes = j["notes"].get<std::vector<std::string>>();
  return r;
}

void validate_forward_json(const json& j) {
  check_keys(j, "", {"format", "version", "problem_id", "theta", "U", "lambda", "active_set", "objective", "kkt_residual"});
  check_format(j, "ioc-eiv/forward");
  string(require(j, "", "problem_id"), "/problem_id");
  vector_from_json(require(j, "", "theta"), "/theta");
  vector_from_json(require(j, "", "U"), "/U");
  vector_from_json(require(j, "", "lambda"), "/lambda");
  const json& act = require(j, "", "active_set");
  if (!act.is_array()) throw SchemaError("/active_set", "expected an array");
  for (std::size_t i = 0; i < act.size(); ++i) integer(act[i], child("/active_set", i));
  number(require(j, "", "objective"), "/objective");
  const json& k = require(j, "", "kkt_residual");
  check_keys(k, "/kkt_residual", {"stationarity", "complementarity", "primal", "dual"});
  for (const char* key : {"stationarity", "complementarity", "primal", "dual"})
    number(require(k, "/kkt_residual", key), std::string("/kkt_residual/") + key);
}

}  // namespace ioc_eiv::io
