#include <charconv>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "foldctl/commands.h"

int main(int argc, char** argv) {
  CLI::App app{"Blow-up based stabilization of slow-fast systems at fold points"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir;
  bool plot = false;
  for (const char* name : {"analyze", "design", "simulate", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--scenario", scenario, "Scenario JSON file")->required();
    sub->add_flag("--plot", plot, "Also write SVG plots");
    sub->add_option("--out", out_dir, "Output directory");
  }
  if (argc == 1) {
    std::cout << app.help();
    return foldctl::kExitSchema;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : foldctl::kExitSchema;
  }

  foldctl::CommandOptions opts;
  opts.plot = plot;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  if (const char* env = std::getenv("FOLDCTL_SEED"); env && *env) {
    std::uint64_t seed = 0;
    const std::string text(env);
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
    if (ec != std::errc() || end != text.data() + text.size()) {
      std::cerr << "error: FOLDCTL_SEED must be a non-negative integer, got '" << text << "'\n";
      return foldctl::kExitSchema;
    }
    opts.seed = seed;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();
  return foldctl::dispatch(subcommand, scenario, opts, std::cout, std::cerr);
}
