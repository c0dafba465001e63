#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "manifest.hpp"

namespace {

using namespace dtstyle::cli;

// Manifest-backed flags. Every flag given on the command line overrides the
// manifest entry of the same name.
struct RunFlags {
  std::string manifest;
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_run_flags(CLI::App& cmd, RunFlags& flags) {
  cmd.add_option("--manifest", flags.manifest, "Run manifest (key = value lines)");
  struct Spec {
    const char* flag;
    const char* key;
    const char* help;
  };
  static const Spec kSpecs[] = {
      {"--content", "content", "Content image (PNG or JPEG)"},
      {"--style", "style", "Style image (PNG or JPEG)"},
      {"--weights", "weights", "Network weight file"},
      {"--out", "out", "Output directory"},
      {"--resolution", "resolution", "Working resolution, N or WxH"},
      {"--threshold", "threshold", "Silhouette luminance threshold in [0, 1]"},
      {"--alpha", "alpha", "Content loss weight"},
      {"--beta", "beta", "Style loss weight"},
      {"--gamma", "gamma", "Distance loss weight"},
      {"--power", "power", "Distance emphasis exponent"},
      {"--content-layer", "content_layer", "Content layer name"},
      {"--style-layers", "style_layers", "Comma-separated style layer names"},
      {"--style-weights", "style_weights", "Comma-separated style layer weights"},
      {"--pool", "pool", "Pooling mode: max or average"},
      {"--iterations", "iterations", "Optimizer iterations"},
      {"--lr", "lr", "Adam learning rate"},
      {"--seed", "seed", "Recorded run seed"},
      {"--snapshot-every", "snapshot_every", "Snapshot interval, 0 disables"},
  };
  for (const Spec& s : kSpecs) {
    cmd.add_option_function<std::string>(
        s.flag, [&flags, key = std::string(s.key)](const std::string& v) { flags.overrides.emplace_back(key, v); },
        s.help);
  }
  cmd.add_flag_function(
      "--invert,!--no-invert",
      [&flags](std::int64_t n) { flags.overrides.emplace_back("invert", n > 0 ? "true" : "false"); },
      "Treat light pixels as the silhouette");
  cmd.add_flag_function(
      "--normalize-distance,!--no-normalize-distance",
      [&flags](std::int64_t n) { flags.overrides.emplace_back("normalize_distance", n > 0 ? "true" : "false"); },
      "Divide distances by the image diagonal before emphasis");
}

RunManifest build_manifest(const RunFlags& flags) {
  if (!flags.manifest.empty() && !std::filesystem::is_regular_file(flags.manifest)) {
    throw CliError(ErrorCategory::input_missing, "manifest not found: " + flags.manifest);
  }
  RunManifest m = flags.manifest.empty() ? RunManifest{} : load_manifest(flags.manifest);
  for (const auto& [key, value] : flags.overrides) set_field(m, key, value);
  return m;
}

std::vector<double> parse_values(const std::string& text) {
  RunManifest scratch;
  set_field(scratch, "style_weights", text);
  return scratch.style_weights;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Silhouette-preserving neural style transfer"};
  app.require_subcommand(1);

  RunFlags gen_flags;
  CLI::App* generate = app.add_subcommand("generate", "Run one style transfer");
  add_run_flags(*generate, gen_flags);

  RunFlags sweep_flags;
  std::string axis = "gamma";
  std::string values;
  std::size_t jobs = 1;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter sweep and compose a comparison grid");
  add_run_flags(*sweep, sweep_flags);
  sweep->add_option("--axis", axis, "Swept parameter: gamma, alpha_beta or power")
      ->check(CLI::IsMember({"gamma", "alpha_beta", "power"}));
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  DistanceDebugOptions dbg;
  std::string dbg_content;
  std::string dbg_out = "out";
  CLI::App* debug = app.add_subcommand("distance-debug", "Write the silhouette mask and distance field");
  debug->add_option("--content", dbg_content, "Content image")->required();
  debug->add_option("--out", dbg_out, "Output directory");
  debug->add_option("--threshold", dbg.threshold, "Silhouette luminance threshold in [0, 1]");
  debug->add_option("--power", dbg.power, "Emphasis exponent")->check(CLI::PositiveNumber);
  debug->add_flag("--invert,!--no-invert", dbg.invert, "Treat light pixels as the silhouette");
  debug->add_flag("--normalize-distance,!--no-normalize-distance", dbg.normalize,
                  "Divide distances by the image diagonal");

  std::string weights_path;
  CLI::App* check = app.add_subcommand("check-weights", "Validate a weight file and print its layers");
  check->add_option("weights", weights_path, "Weight file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadArguments;
  }

  try {
    if (*generate) {
      run_generate(build_manifest(gen_flags), std::cout);
    } else if (*sweep) {
      run_sweep(build_manifest(sweep_flags), parse_axis(axis), parse_values(values), jobs, std::cout);
    } else if (*debug) {
      dbg.content = dbg_content;
      dbg.out = dbg_out;
      run_distance_debug(dbg, std::cout);
    } else if (*check) {
      run_check_weights(weights_path, std::cout);
    }
  } catch (const std::exception& e) {
    return report_error(e, std::cerr);
  }
  return kExitOk;
}
