#include <CLI11.hpp>

#include <iostream>

#include "qrc/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qrc: quasiregular curve analysis"};
  app.set_version_flag("--version", std::string("qrc ") + qrc::kToolVersion);
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario file");
  std::string path;
  std::string out;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool csv = false;
  run->add_option("scenario", path, "scenario JSON file")->required();
  run->add_option("--out", out, "directory for the report and CSV files");
  auto* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--threads", threads, "worker threads (0 = hardware)");
  run->add_flag("--csv", csv, "write CSV dumps next to the report");

  auto* list = app.add_subcommand("list-builtins", "list built-in forms, maps, metrics, cutoffs and tasks");
  bool machine = false;
  list->add_flag("--machine", machine, "JSON output");

  CLI11_PARSE(app, argc, argv);

  if (*list) {
    std::cout << qrc::list_builtins(machine);
    return 0;
  }

  qrc::set_thread_count(threads);
  qrc::RunOptions opt;
  if (*seed_opt) opt.seed = seed;
  opt.out_dir = out;
  opt.csv = csv;
  auto res = qrc::run_scenario_file(path, opt);
  for (const auto& e : res.errors) std::cerr << "error: " << e << '\n';
  if (!res.report.is_null()) {
    if (out.empty()) std::cout << res.report.dump(2) << '\n';
    for (const auto& p : res.written) std::cerr << "wrote " << p.string() << '\n';
    for (const auto& t : res.report["tasks"])
      if (t.contains("verified") && !t["verified"].get<bool>())
        std::cerr << "not verified: " << t["name"].get<std::string>() << '\n';
  }
  return res.exit_code;
}
