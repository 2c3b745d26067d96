#include <chrono>
#include <filesystem>
#include <functional>
#include <tuple>
#include <iostream>
#include <new>

#include "CLI11.hpp"
#include "commands.hpp"
#include "selftest.hpp"

#ifndef AZPROBE_FIXTURE_DIR
#define AZPROBE_FIXTURE_DIR "fixtures"
#endif

using namespace azprobe;
using namespace azprobe::cli;

namespace {

int run(const std::function<void()>& body) {
  try {
    body();
    return exit_ok;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const config::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const concepts::UnknownConcept& e) {
    std::cerr << "error: " << e.what() << "; valid names: " << valid_concept_names() << '\n';
    return exit_usage;
  } catch (const InvariantFailure& e) {
    std::cerr << "internal invariant failure: " << e.what() << '\n';
    return exit_internal;
  } catch (const probes::ProbeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_data;
  } catch (const concepts::MissingContext& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_data;
  } catch (const std::logic_error& e) {
    std::cerr << "internal invariant failure: " << e.what() << '\n';
    return exit_internal;
  } catch (const std::bad_alloc&) {
    std::cerr << "internal failure: out of memory\n";
    return exit_internal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_data;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept probing, value regression and activation analysis for chess networks"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir = "out";
  int jobs = default_jobs();
  bool force = false;
  std::vector<std::string> seed_overrides;
  app.add_option("--config", config_path, "run configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--jobs", jobs, "worker threads (default: processors)")->check(CLI::PositiveNumber);
  app.add_flag("--force", force, "recompute cached activations");
  app.add_option("--seed-override", seed_overrides, "replace a named seed, name=value (repeatable)");

  using Command = std::function<void(const Context&)>;
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"extract-concepts", "evaluate native concepts for every unique corpus position", [](const Context& c) { cmd_extract_concepts(c); }},
      {"activations", "write activation caches for the configured checkpoints and layers", [](const Context& c) { cmd_activations(c); }},
      {"probe", "fit sparse probes and write score grids", [](const Context& c) { cmd_probe(c); }},
      {"residuals", "residual report for one probe", [](const Context& c) { cmd_residuals(c); }},
      {"value-reg", "regress the value head on concepts across checkpoints", [](const Context& c) { cmd_value_reg(c); }},
      {"nmf", "non-negative factorisation of one layer", [](const Context& c) { cmd_nmf(c); }},
      {"cov", "activation-input covariance maps", [](const Context& c) { cmd_cov(c); }},
      {"openings", "opening move distributions of a corpus and of checkpoints", [](const Context& c) { cmd_openings(c); }},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [name, help, fn] : commands) subs.emplace_back(app.add_subcommand(name, help), fn);

  std::string fixture_dir = AZPROBE_FIXTURE_DIR;
  auto* selftest = app.add_subcommand("selftest", "run the invariant suite against the shipped fixtures");
  selftest->add_option("--fixtures", fixture_dir, "fixture directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_ok : exit_usage;
  }

  if (selftest->parsed()) {
    int failures = 0;
    const int code = run([&] {
      const auto t0 = std::chrono::steady_clock::now();
      const auto work = fs::path(out_dir) / "selftest";
      fs::create_directories(work);
      for (const auto& r : run_selftest(fixture_dir, work, jobs, std::cout)) failures += r.pass ? 0 : 1;
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << (failures ? "selftest FAILED" : "selftest passed") << " in " << secs << " s\n";
      if (secs > 300) std::cout << "warning: selftest exceeded the 5 minute budget\n";
    });
    if (code != exit_ok) return code;
    return failures ? exit_internal : exit_ok;
  }

  for (const auto& [sub, fn] : subs) {
    if (!sub->parsed()) continue;
    if (config_path.empty()) {
      std::cerr << "error: " << sub->get_name() << " needs --config\n";
      return exit_usage;
    }
    return run([&, &fn = fn] {
      Context ctx;
      ctx.cfg = config::Config::load(config_path);
      ctx.cfg.override_seeds(seed_overrides);
      ctx.out = out_dir;
      ctx.jobs = jobs;
      ctx.force = force;
      fs::create_directories(ctx.out);
      fn(ctx);
    });
  }
  return exit_usage;
}
