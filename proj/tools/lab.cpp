// lab <subcommand> --config <path> [--seed S] [--out DIR]
//
// Exit codes: 0 all in-run checks pass, 1 a check failed or the run
// aborted, 2 the config or command line is invalid.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "quintic/lab.hpp"

namespace lab = quintic::lab;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> k;
  std::string lemma;
  bool print_config = false;
};

lab::Json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw lab::ValidationError({"config: cannot open " + path});
  try {
    return lab::Json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw lab::ValidationError({"config: not valid JSON (" + std::string(e.what()) + ")"});
  }
}

lab::ExperimentConfig build_config(lab::Kind kind, const Overrides& o) {
  lab::Json j = o.config.empty() ? lab::Json::object() : read_json(o.config);
  if (!j.is_object()) throw lab::ValidationError({"config: expected a JSON object"});
  if (!j.contains("kind")) j["kind"] = lab::to_string(kind);
  if (j["kind"] != lab::to_string(kind))
    throw lab::ValidationError({"kind: config is '" + j["kind"].dump() + "' but the subcommand is '" +
                                lab::to_string(kind) + "'"});
  if (o.seed) j["seed"] = *o.seed;
  if (!o.out.empty()) j["output"] = o.out;
  if (o.k || !o.lemma.empty()) {
    if (!j.contains("params")) j["params"] = lab::Json::object();
    if (o.k) j["params"]["k"] = *o.k;
    if (!o.lemma.empty()) j["params"]["lemma"] = o.lemma;
  }
  return lab::from_json(j);
}

int run(lab::Kind kind, const Overrides& o) {
  const auto cfg = build_config(kind, o);
  if (o.print_config) {
    lab::validate(cfg);
    std::cout << lab::emit(cfg);
    return 0;
  }
  const auto rep = lab::run_experiment(cfg);
  for (const auto& c : rep.checks)
    std::printf("%s %-32s %.6g (%s)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value, c.limit.c_str());
  std::printf("report: %s (%.2f s)\n", (std::filesystem::path(cfg.output) / "report.json").c_str(), rep.wall_time);
  return lab::exit_code(rep);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the quintic many-body / NLS toolkit"};
  app.require_subcommand(1);
  Overrides o;
  std::uint64_t seed = 0;
  int k = 0;
  struct Sub {
    CLI::App* app;
    lab::Kind kind;
    CLI::Option* seed;
    CLI::Option* k;
  };
  std::vector<Sub> subs;
  for (lab::Kind kind : lab::all_kinds()) {
    auto* sub = app.add_subcommand(lab::to_string(kind), std::string("run a ") + lab::to_string(kind) + " experiment");
    sub->add_option("--config", o.config, "JSON config (defaults when omitted)");
    auto* seed_opt = sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", o.out, "override the output directory");
    sub->add_flag("--print-config", o.print_config, "print the resolved config and exit");
    CLI::Option* k_opt = nullptr;
    if (kind == lab::Kind::Couplings) k_opt = sub->add_option("--k", k, "number of levels");
    if (kind == lab::Kind::Probe) sub->add_option("--lemma", o.lemma, "inequality id");
    subs.push_back({sub, kind, seed_opt, k_opt});
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  for (const auto& s : subs) {
    if (!s.app->parsed()) continue;
    if (s.seed->count()) o.seed = seed;
    if (s.k && s.k->count()) o.k = k;
    try {
      return run(s.kind, o);
    } catch (const lab::ValidationError& e) {
      for (const auto& issue : e.issues()) std::fprintf(stderr, "invalid: %s\n", issue.c_str());
      return 2;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }
  return 2;
}
