#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "quintic/lab.hpp"

using namespace quintic;
using namespace quintic::lab;
namespace fs = std::filesystem;

namespace {

const fs::path& scratch_root() {
  static const fs::path root = fs::temp_directory_path() / ("quintic_lab_test_" + std::to_string(::getpid()));
  return root;
}

struct ScratchCleanup {
  ~ScratchCleanup() {
    std::error_code ec;
    fs::remove_all(scratch_root(), ec);
  }
} cleanup;

fs::path scratch(const std::string& name) {
  const auto p = scratch_root() / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig make(Kind kind, Json params, const fs::path& out, Json tolerances = Json::object()) {
  Json j;
  j["kind"] = to_string(kind);
  j["output"] = out.string();
  j["params"] = std::move(params);
  j["tolerances"] = std::move(tolerances);
  return from_json(j);
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// A schema-valid random value for a field.
Json random_value(const Field& f, Rng& rng) {
  auto pick_int = [&](double lo, double hi) {
    const long a = static_cast<long>(std::max(lo, -50.0));
    const long b = static_cast<long>(std::min(hi, static_cast<double>(a + 20)));
    return a + static_cast<long>(rng.uniform01() * static_cast<double>(b - a + 1)) % (b - a + 1);
  };
  auto pick_real = [&](const Field& g) {
    const double lo = std::isfinite(g.lo) ? g.lo : -10.0;
    const double hi = std::isfinite(g.hi) ? g.hi : lo + 10.0;
    double v = rng.uniform(lo, hi);
    if (g.lo_open && v <= g.lo) v = 0.5 * (lo + hi);
    return v;
  };
  switch (f.type) {
    case FieldType::Int: return pick_int(f.lo, f.hi);
    case FieldType::Real: return pick_real(f);
    case FieldType::Bool: return rng.uniform01() < 0.5;
    case FieldType::String:
      if (f.choices.empty()) return "path_" + std::to_string(pick_int(0, 9));
      return f.choices[static_cast<std::size_t>(rng.uniform01() * static_cast<double>(f.choices.size()))];
    case FieldType::IntList: {
      Json a = Json::array();
      for (int i = 0, m = static_cast<int>(pick_int(0, 4)); i < m; ++i) a.push_back(pick_int(f.lo, f.hi));
      return a;
    }
    case FieldType::RealList: {
      Json a = Json::array();
      for (int i = 0, m = static_cast<int>(pick_int(0, 4)); i < m; ++i) a.push_back(pick_real(f));
      return a;
    }
    case FieldType::Modes: {
      Json a = Json::array();
      for (int i = 0, m = static_cast<int>(pick_int(0, 3)); i < m; ++i)
        a.push_back(Json::array({pick_int(-3, 3), pick_int(-3, 3), rng.normal(), rng.normal()}));
      return a;
    }
  }
  return nullptr;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  for (Kind k : all_kinds()) {
    const auto cfg = default_config(k);
    EXPECT_EQ(parse(emit(cfg)), cfg) << to_string(k);
    EXPECT_TRUE(preflight(cfg).empty()) << to_string(k);
  }
}

TEST(Config, RandomConfigsRoundTrip) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const Kind k = all_kinds()[static_cast<std::size_t>(trial) % all_kinds().size()];
    Json j;
    j["kind"] = to_string(k);
    j["seed"] = rng.next_seed();
    j["output"] = "out/t" + std::to_string(trial);
    Json params = Json::object();
    for (const auto& f : param_schema(k))
      if (rng.uniform01() < 0.6) params[f.name] = random_value(f, rng);
    Json tol = Json::object();
    for (const auto& f : tolerance_schema(k))
      if (rng.uniform01() < 0.6) tol[f.name] = random_value(f, rng);
    j["params"] = params;
    j["tolerances"] = tol;
    const auto cfg = from_json(j);
    const auto again = parse(emit(cfg));
    ASSERT_EQ(again, cfg) << emit(cfg);
    EXPECT_EQ(emit(again), emit(cfg));
  }
}

TEST(Config, EveryOffendingFieldIsListed) {
  Json j = Json::parse(R"({
    "kind": "nls-run", "seed": -3, "colour": "red",
    "params": {"dt": 0, "T": "long", "n": 7.5, "mystery": 1, "initial": "guess", "M": [1, "x"]},
    "tolerances": {"mass_drift": -1, "speed": 2}
  })");
  try {
    from_json(j);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    const auto& v = e.issues();
    auto has = [&](const std::string& prefix) {
      return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.rfind(prefix, 0) == 0; });
    };
    EXPECT_TRUE(has("colour"));
    EXPECT_TRUE(has("seed"));
    EXPECT_TRUE(has("params.dt"));
    EXPECT_TRUE(has("params.T"));
    EXPECT_TRUE(has("params.n"));
    EXPECT_TRUE(has("params.mystery"));
    EXPECT_TRUE(has("params.initial"));
    EXPECT_TRUE(has("params.M[1]"));
    EXPECT_TRUE(has("tolerances.mass_drift"));
    EXPECT_TRUE(has("tolerances.speed"));
    EXPECT_EQ(v.size(), 10u);
  }
}

TEST(Config, MissingOrUnknownKind) {
  EXPECT_THROW(parse("{}"), ValidationError);
  EXPECT_THROW(parse(R"({"kind": "warp-drive"})"), ValidationError);
  EXPECT_THROW(parse("not json"), ValidationError);
  EXPECT_THROW(parse("[1, 2]"), ValidationError);
}

TEST(Config, PreflightChecksModulePreconditions) {
  const auto dir = scratch("preflight");
  auto issues = preflight(make(Kind::Residuals, {{"N", 3}, {"k", 2}}, dir));
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_NE(issues[0].find("params.k"), std::string::npos);

  issues = preflight(make(Kind::NlsRun, {{"n", 10}, {"band", 9}, {"T", 0.0105}, {"dt", 0.001}}, dir));
  EXPECT_EQ(issues.size(), 2u);  // band > n/2 and T not a multiple of dt

  issues = preflight(make(Kind::NlsRun, {{"d", 2}, {"n", 6}, {"initial", "modes"}, {"modes", Json::parse("[[1,2,3]]")}}, dir));
  EXPECT_EQ(issues.size(), 1u);

  issues = preflight(make(Kind::NlsRun, {{"n", 7}}, dir));
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_NE(issues[0].find("params.n"), std::string::npos);

  issues = preflight(make(Kind::ManyBodyRun, {{"d", 3}, {"n", 16}, {"N", 3}}, dir));
  EXPECT_EQ(issues.size(), 1u);  // 2^36 amplitudes

  issues = preflight(make(Kind::NlsRun, {{"initial", "file"}, {"file", (dir / "absent.bin").string()}}, dir));
  EXPECT_EQ(issues.size(), 1u);
  EXPECT_THROW(run_experiment(make(Kind::Residuals, {{"k", 2}}, dir)), ValidationError);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Run, CouplingsThreeGivesFifteenMaps) {
  const auto dir = scratch("couplings");
  const auto rep = run_experiment(make(Kind::Couplings, {{"k", 3}}, dir));
  EXPECT_TRUE(rep.passed());
  const auto j = Json::parse(slurp(dir / "couplings.json"));
  EXPECT_EQ(j.at("k"), 3);
  EXPECT_EQ(j.at("map_count"), 15);
  EXPECT_EQ(j.at("bound_2_3k_minus_1"), 256);
  EXPECT_EQ(j.at("raw_count_bruteforce"), 120);
  EXPECT_EQ(j.at("raw_count_paper_formula"), 840);
  EXPECT_EQ(j.at("min_unclogged"), 2);
  EXPECT_TRUE(j.at("witness").is_string());
  const auto report = Json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(report.at("config"), to_json(rep.config));
  EXPECT_TRUE(report.at("passed").get<bool>());
}

TEST(Run, NlsZeroTimeGivesOneSnapshot) {
  const auto dir = scratch("nls0");
  const auto rep = run_experiment(make(Kind::NlsRun, {{"d", 1}, {"n", 16}, {"T", 0.0}, {"M", Json::array({2.0})}}, dir));
  const auto csv = slurp(dir / "nls.csv");
  EXPECT_EQ(count_lines(csv), 2u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,mass,E_NLS,E_L_M2,E_H_M2,high_kinetic_M2");
  EXPECT_TRUE(rep.passed());
  EXPECT_TRUE(rep.metrics.at("utfl_M").is_null() || rep.metrics.at("utfl_M").is_number_integer());
}

TEST(Run, NlsModesDatum) {
  const auto dir = scratch("nls_modes");
  const auto rep = run_experiment(make(
      Kind::NlsRun,
      {{"d", 1}, {"n", 16}, {"T", 0.01}, {"initial", "modes"}, {"normalize", "none"}, {"modes", Json::parse("[[2, 0.5, 0]]")}},
      dir));
  // plane wave: |u| constant, mass = 2 pi |a|^2
  const auto csv = slurp(dir / "nls.csv");
  const auto line2 = csv.substr(csv.find('\n') + 1);
  const double m = std::stod(line2.substr(line2.find(',') + 1));
  EXPECT_NEAR(m, 2.0 * std::numbers::pi * 0.25, 1e-13);
  EXPECT_TRUE(rep.passed());
}

TEST(Run, IdenticalConfigsGiveIdenticalCsv) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  const Json nls{{"d", 1}, {"n", 32}, {"T", 0.05}, {"snapshot_every", 5}};
  run_experiment(make(Kind::NlsRun, nls, a));
  run_experiment(make(Kind::NlsRun, nls, b));
  EXPECT_EQ(slurp(a / "nls.csv"), slurp(b / "nls.csv"));

  const Json chaos{{"Ns", {2, 3}}, {"T", 0.05}};
  run_experiment(make(Kind::Chaos, chaos, a));
  run_experiment(make(Kind::Chaos, chaos, b));
  EXPECT_EQ(slurp(a / "chaos.csv"), slurp(b / "chaos.csv"));

  const Json probe{{"lemma", "approx-identity"}, {"samples", 4}};
  run_experiment(make(Kind::Probe, probe, a));
  ::setenv("QUINTIC_THREADS", "3", 1);
  run_experiment(make(Kind::Probe, probe, b));
  ::unsetenv("QUINTIC_THREADS");
  EXPECT_EQ(slurp(a / "probe_approx-identity.csv"), slurp(b / "probe_approx-identity.csv"));
}

TEST(Run, SeedChangesRandomOutputs) {
  const auto a = scratch("seed_a");
  const auto b = scratch("seed_b");
  auto ca = make(Kind::NlsRun, {{"d", 1}, {"n", 16}, {"T", 0.01}}, a);
  auto cb = make(Kind::NlsRun, {{"d", 1}, {"n", 16}, {"T", 0.01}}, b);
  cb.seed = 2;
  run_experiment(ca);
  run_experiment(cb);
  EXPECT_NE(slurp(a / "nls.csv"), slurp(b / "nls.csv"));
}

TEST(Run, ToleranceFailureIsReported) {
  const auto dir = scratch("tolfail");
  // observed halving ratio is ~4, outside a [4.5, 5] window
  const auto rep = run_experiment(make(Kind::Residuals, Json::object(), dir, {{"ratio_min", 4.5}}));
  EXPECT_FALSE(rep.passed());
  EXPECT_EQ(exit_code(rep), 1);
  EXPECT_TRUE(fs::exists(dir / "residuals.csv"));
  const auto report = Json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report.at("tolerances").at("ratio_min"), 4.5);
  EXPECT_FALSE(report.at("passed").get<bool>());
}

TEST(Run, FailedRunRemovesPartialOutputs) {
  const auto dir = scratch("partial");
  const auto field = scratch("field.bin");
  fs::create_directories(field.parent_path());
  io::write_field(field.string(), constant_field({1, 8}, 1.0));
  // the dump is 1D while the run asks for 3D: fails after dispatch
  const auto cfg = make(Kind::NlsRun, {{"initial", "file"}, {"file", field.string()}}, dir);
  EXPECT_TRUE(preflight(cfg).empty());
  EXPECT_THROW(run_experiment(cfg), Error);
  EXPECT_FALSE(fs::exists(dir));

  // a preexisting directory is kept, only the run's files go
  fs::create_directories(dir);
  io::write_field((dir / "keep.bin").string(), constant_field({1, 8}, 1.0));
  auto mb = make(Kind::ManyBodyRun, {{"initial", "file"}, {"file", field.string()}}, dir);
  EXPECT_THROW(run_experiment(mb), Error);
  EXPECT_TRUE(fs::exists(dir / "keep.bin"));
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator()), 1);
}

TEST(Plot, ChaosTableIsTwoColumns) {
  const auto dir = scratch("plot_chaos");
  run_experiment(make(Kind::Chaos, {{"Ns", {2, 3}}, {"T", 0.05}}, dir));
  const auto dat = slurp(dir / "chaos.dat");
  std::istringstream is(dat);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "# N trace_distance");
  int rows = 0;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    double N = 0, D = 0;
    std::string extra;
    ls >> N >> D;
    EXPECT_FALSE(ls >> extra);
    EXPECT_EQ(N, 2 + rows);
    EXPECT_GT(D, 0.0);
    ++rows;
  }
  EXPECT_EQ(rows, 2);
  EXPECT_TRUE(fs::exists(dir / "chaos.gp"));
}

TEST(Plot, ProbeTableIsCutoffAgainstRatio) {
  const auto dir = scratch("plot_probe");
  run_experiment(make(Kind::Probe, {{"lemma", "strichartz"}, {"samples", 4}}, dir));
  const auto dat = slurp(dir / "probe_strichartz.dat");
  EXPECT_EQ(dat.substr(0, dat.find('\n')), "# M max_ratio");
  EXPECT_EQ(count_lines(dat), 4u);
}

TEST(Plot, EmptyTableGivesHeaderOnly) {
  const auto dir = scratch("plot_empty");
  RunReport rep;
  rep.config = default_config(Kind::Chaos);
  rep.config.output = dir.string();
  rep.tables.push_back({"empty", {"N", "D"}, {}, {}});
  const auto files = emit_plotdata(rep);
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(slurp(dir / "empty.dat"), "# N D\n");
}

TEST(Csv, NumbersRoundTripExactly) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-300, 300));
    EXPECT_EQ(std::stod(lab::detail::format_cell(v)), v);
  }
  EXPECT_EQ(lab::detail::format_cell(Json(7)), "7");
  EXPECT_EQ(lab::detail::format_cell(Json("a,b")), "\"a,b\"");
}

#ifdef QUINTIC_LAB_BINARY
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QUINTIC_LAB_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  EXPECT_EQ(run_cli("couplings --k 3 --out " + (dir / "ok").string()), 0);
  EXPECT_EQ(Json::parse(slurp(dir / "ok" / "couplings.json")).at("map_count"), 15);

  const auto bad = dir / "bad.json";
  std::ofstream(bad) << R"({"kind": "chaos", "params": {"Ns": [0]}})";
  EXPECT_EQ(run_cli("chaos --config " + bad.string()), 2);
  EXPECT_EQ(run_cli("nls-run --config " + bad.string()), 2);  // kind mismatch
  EXPECT_EQ(run_cli("couplings --k 11"), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);

  const auto strict = dir / "strict.json";
  std::ofstream(strict) << R"({"kind": "residuals", "tolerances": {"ratio_min": 4.5}})";
  EXPECT_EQ(run_cli("residuals --config " + strict.string() + " --out " + (dir / "strict").string()), 1);

  EXPECT_EQ(run_cli("hufl --seed 4 --out " + (dir / "hufl").string()), 0);
  EXPECT_EQ(Json::parse(slurp(dir / "hufl" / "report.json")).at("config").at("seed"), 4);
}
#endif
