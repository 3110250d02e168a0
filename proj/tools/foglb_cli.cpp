#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "foglb/harness.hpp"
#include "foglb/metrics.hpp"
#include "foglb/scenario.hpp"
#include "foglb/topology.hpp"

namespace {

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            const std::vector<std::string>& arms,
            const std::vector<std::uint64_t>& seeds) {
  auto sc = foglb::harness::load_scenario(scenario_path);
  auto art = foglb::harness::run_experiment(sc, out_dir, arms, seeds);
  std::cout << "ran " << art.runs.size() << " (arm, seed) cells\n";
  if (!out_dir.empty()) {
    std::cout << "wrote " << out_dir << "/summary.csv and summary.json\n";
  } else {
    std::cout << foglb::harness::summaries_to_csv(art);
  }
  return 0;
}

int cmd_validate(const std::string& scenario_path) {
  auto sc = foglb::harness::load_scenario(scenario_path);
  auto d = foglb::harness::validate(sc);
  for (const auto& w : d.warnings) std::cout << "warning: " << w << '\n';
  if (d.ok()) {
    std::cout << "ok\n";
    return 0;
  }
  for (const auto& e : d.errors) std::cout << "error: " << e << '\n';
  return 1;
}

int cmd_export_topology(const std::string& scenario_path,
                        const std::string& out_file, std::uint64_t seed) {
  auto sc = foglb::harness::load_scenario(scenario_path);
  auto topo = foglb::harness::topology_for_seed(sc, seed);
  if (out_file.empty()) {
    std::cout << foglb::topo::to_text(topo);
  } else {
    foglb::topo::save_topology(topo, out_file);
    std::cout << "wrote " << out_file << '\n';
  }
  return 0;
}

int cmd_replay(const std::string& log_path, const std::string& out_file) {
  auto log = foglb::metrics::load_event_log(log_path);
  auto s = foglb::metrics::summarize_run(log);
  std::string csv = "metric,value\n";
  for (const auto& m : foglb::harness::metric_names()) {
    csv += m + "," +
           foglb::metrics::format_double(foglb::harness::metric_value(s, m)) +
           "\n";
  }
  if (out_file.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_file);
    out << csv;
    std::cout << "wrote " << out_file << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fog-network load-balancing simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, out_file, log_path;
  std::vector<std::string> arms;
  std::vector<std::uint64_t> seeds;
  std::uint64_t seed = 1;

  auto* run = app.add_subcommand("run", "run an experiment scenario");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--arms", arms, "restrict to these arm names")
      ->delimiter(',');
  run->add_option("--seeds", seeds, "restrict to these seeds")->delimiter(',');

  auto* val = app.add_subcommand("validate", "check a scenario file");
  val->add_option("scenario", scenario_path, "scenario file")->required();

  auto* exp = app.add_subcommand("export-topology",
                                 "generate and export a topology document");
  exp->add_option("scenario", scenario_path, "scenario file")->required();
  exp->add_option("--out", out_file, "output file (stdout when omitted)");
  exp->add_option("--seed", seed, "seed to generate with");

  auto* rep = app.add_subcommand("replay",
                                 "recompute metrics from a saved event log");
  rep->add_option("eventlog", log_path, "event log file")->required();
  rep->add_option("--out", out_file, "output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, out_dir, arms, seeds);
    if (val->parsed()) return cmd_validate(scenario_path);
    if (exp->parsed()) return cmd_export_topology(scenario_path, out_file, seed);
    if (rep->parsed()) return cmd_replay(log_path, out_file);
  } catch (const foglb::ConfigInvalidError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
