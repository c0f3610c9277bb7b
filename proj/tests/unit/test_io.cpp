#include "ioc_eiv/error.hpp"
#include "ioc_eiv/forward.hpp"
#include "ioc_eiv/io.hpp"

#include "support/problems.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace ioc_eiv;
using io::json;

namespace {

std::string config_path(const char* name) { return std::string(IOC_EIV_SOURCE_DIR) + "/configs/" + name; }

std::string temp_file(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "ioc_eiv_test_io";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / name).string();
  io::write_text_file(path, text);
  return path;
}

// Text round trip, the way files are written and read.
json reparse(const json& j) { return json::parse(j.dump(2)); }

template <class F>
std::string schema_path(F&& f) {
  try {
    f();
  } catch (const io::SchemaError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST(Io, MatrixAndVectorRoundTripExactly) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 1.0);
  const Matrix m = Matrix::NullaryExpr(3, 4, [&] { return z(rng) * 1e-7; });
  const Vector v = Vector::NullaryExpr(5, [&] { return z(rng) * 1e9; });
  EXPECT_EQ(io::matrix_from_json(reparse(io::to_json(m)), "/m"), m);
  EXPECT_EQ(io::vector_from_json(reparse(io::to_json(v)), "/v"), v);
  const Matrix empty(0, 2);
  EXPECT_EQ(io::matrix_from_json(io::to_json(empty), "/e").cols(), 2);
}

TEST(Io, ShippedConfigMatchesReferenceProblem) {
  const io::Config cfg = io::load_config(config_path("spring_damper.json"));
  const ForwardProblem ref = support::spring_damper();
  EXPECT_LE((cfg.problem.system().A() - ref.system().A()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((cfg.problem.system().B() - ref.system().B()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(cfg.problem.horizon(), 10);
  EXPECT_EQ(cfg.problem.feature_count(), 3);
  EXPECT_EQ(*cfg.problem.theta_true(), *ref.theta_true());
  EXPECT_EQ(cfg.problem.x0(), ref.x0());
  EXPECT_EQ(cfg.demo_count, 10);
  EXPECT_EQ(cfg.reps, 10);
  EXPECT_EQ(cfg.noise.levels, (std::vector<double>{5, 10, 20}));
  EXPECT_EQ(cfg.methods, (std::vector<std::string>{"kkt", "map", "tls", "mean"}));
  EXPECT_DOUBLE_EQ(cfg.norm.value, 22.0);
  EXPECT_EQ(cfg.map.gibbs.n_iter, 2000);
  EXPECT_EQ(cfg.map.gibbs.n_keep, 300);
  const Vector a = forward::solve(cfg.problem, *ref.theta_true()).U;
  const Vector b = forward::solve(ref, *ref.theta_true()).U;
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);

  const io::Config pos = io::load_config(config_path("tls_positivity.json"));
  EXPECT_EQ(pos.noise.kind, NoiseSpec::Kind::truncated_gaussian);
  EXPECT_DOUBLE_EQ(pos.tls.ridge, 1e-4);
}

TEST(Io, CanonicalProblemRoundTrip) {
  const ForwardProblem fp = support::spring_damper();
  const json j = reparse(io::problem_to_json(fp));
  io::validate_problem_json(j);
  const ForwardProblem back = io::problem_from_json(j);
  EXPECT_EQ(back.system().A(), fp.system().A());
  EXPECT_EQ(back.system().B(), fp.system().B());
  EXPECT_EQ(io::problem_id(back), io::problem_id(fp));
  EXPECT_EQ(io::problem_id(fp).size(), 16u);
  EXPECT_NE(io::problem_id(support::spring_damper(0.8)), io::problem_id(fp));
}

TEST(Io, DemoSetRoundTrip) {
  const ForwardProblem fp = support::spring_damper();
  const Vector U = forward::solve(fp, *fp.theta_true()).U;
  DemoSet ds = generate(U, NoiseSpec::gaussian(Matrix::Constant(1, 1, 0.01), 3), 4);
  ds.problem_id = io::problem_id(fp);
  ds.x0 = fp.x0();
  const json j = reparse(io::demo_set_to_json(ds, json{{"kind", "gaussian"}}));
  const DemoSet back = io::demo_set_from_json(j);
  ASSERT_EQ(back.count(), 4);
  for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(back.demos[d], ds.demos[d]);
  EXPECT_EQ(*back.U_star, U);
  EXPECT_EQ(back.problem_id, ds.problem_id);
}

TEST(Io, ReportRoundTrip) {
  io::EstimateReport r;
  r.method = "map";
  r.problem_id = "0123456789abcdef";
  r.theta = Vector::LinSpaced(3, 1.0, 2.0);
  r.Sigma_U = Matrix::Identity(2, 2) * 0.1;
  r.rmse_theta = 0.25;
  r.traces = json{{"cost", {3.0, 2.0, 1.5}}};
  r.notes = {"a note"};
  const io::EstimateReport back = io::report_from_json(reparse(io::to_json(r)));
  EXPECT_EQ(*back.theta, *r.theta);
  EXPECT_EQ(*back.Sigma_U, *r.Sigma_U);
  EXPECT_FALSE(back.lambda.has_value());
  EXPECT_FALSE(back.rmse_U.has_value());
  EXPECT_EQ(back.traces, r.traces);
  EXPECT_EQ(back.notes, r.notes);
}

TEST(Io, SchemaErrorsPointAtTheValue) {
  const json base = io::read_json_file(config_path("spring_damper.json"));

  json j = base;
  j["problem"]["horizon"] = 0;
  EXPECT_EQ(schema_path([&] { io::config_from_json(j); }), "/problem/horizon");

  j = base;
  j["problem"]["features"][1]["kind"] = "velocity";
  EXPECT_EQ(schema_path([&] { io::config_from_json(j); }), "/problem/features/1/kind");

  j = base;
  j["problem"]["dynamics"]["Ac"]["data"][1] = json::array({0.0});
  EXPECT_EQ(schema_path([&] { io::config_from_json(j); }), "/problem/dynamics/Ac/data/1");

  j = base;
  j["methods"][2] = "ransac";
  EXPECT_EQ(schema_path([&] { io::config_from_json(j); }), "/methods/2");

  j = base;
  j["noise"]["levels"][0] = 0;
  EXPECT_EQ(schema_path([&] { io::config_from_json(j); }), "/noise/levels/0");

  j = base;
  j["demos"] = 0;
  EXPECT_EQ(schema_path([&] { io::config_from_json(j); }), "/demos");

  j = base;
  j["problem"]["x0"][0] = "one";
  EXPECT_EQ(schema_path([&] { io::config_from_json(j); }), "/problem/x0/0");
}

TEST(Io, UnknownKeysRejected) {
  json j = io::read_json_file(config_path("spring_damper.json"));
  j["problem"]["horizn"] = 10;
  EXPECT_EQ(schema_path([&] { io::config_from_json(j); }), "/problem/horizn");
  json d = io::demo_set_to_json(generate(Vector::Zero(3), NoiseSpec::gaussian(Matrix::Zero(1, 1), 1), 2));
  d["extra"] = true;
  EXPECT_EQ(schema_path([&] { io::demo_set_from_json(d); }), "/extra");
  d.erase("extra");
  d["format"] = "ioc-eiv/estimate";
  EXPECT_EQ(schema_path([&] { io::demo_set_from_json(d); }), "/format");
  d["format"] = "ioc-eiv/demos";
  d["count"] = 3;
  EXPECT_EQ(schema_path([&] { io::demo_set_from_json(d); }), "/demos");
}

TEST(Io, MalformedFileReportsLine) {
  const std::string path = temp_file("broken.json", "{\n  \"demos\": 10,\n  \"reps\": ,\n}\n");
  try {
    io::read_json_file(path);
    FAIL() << "expected a parse error";
  } catch (const io::SchemaError&) {
    FAIL() << "a parse failure is not a schema error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find(path), std::string::npos) << msg;
  }
  EXPECT_THROW(io::read_json_file(path + ".missing"), Error);
}

TEST(Io, Fnv1aKnownValues) {
  // Offset basis for the empty string, and the published vector for "a".
  EXPECT_EQ(io::fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(io::fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Io, NoiseAtLevelScalesByChannelMean) {
  io::NoiseConfig nc;
  nc.kind = NoiseSpec::Kind::uniform;
  Vector U(4);
  U << 1.0, -2.0, 3.0, -4.0;  // channel means 2 and -3
  const NoiseSpec s = io::noise_at_level(nc, U, 2, 10.0, 5);
  // Uniform half width a has standard deviation a / sqrt(3).
  ASSERT_EQ(s.halfwidth.size(), 2);
  EXPECT_NEAR(s.halfwidth(0) / std::sqrt(3.0), 0.2, 1e-15);
  EXPECT_NEAR(s.halfwidth(1) / std::sqrt(3.0), 0.3, 1e-15);
}
