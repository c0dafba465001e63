#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dtstyle/imageio.hpp"
#include "manifest.hpp"

namespace dtstyle::cli {

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadArguments = 2;
inline constexpr int kExitMissingInput = 3;
inline constexpr int kExitWeightFile = 4;
inline constexpr int kExitRuntime = 5;

enum class ErrorCategory { bad_arguments, input_missing, input_invalid, weight_file, runtime };

std::string_view to_string(ErrorCategory category);
int exit_code(ErrorCategory category);

class CliError : public std::runtime_error {
 public:
  CliError(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

// Maps any exception escaping a command to its category.
CliError classify(const std::exception& e);
// Prints `error: <category>: <message>` as one line and returns the exit code.
int report_error(const std::exception& e, std::ostream& err);

// Output file names inside a run directory.
inline constexpr std::string_view kResultPng = "result.png";
inline constexpr std::string_view kLossCsv = "loss.csv";
inline constexpr std::string_view kManifestEcho = "manifest.txt";
inline constexpr std::string_view kGridPng = "grid.png";
inline constexpr std::string_view kMaskPng = "mask.png";
inline constexpr std::string_view kDistancePng = "distance.png";

std::string snapshot_name(std::size_t iteration);

// Writes result.png, snap_NNNNNN.png snapshots, loss.csv and manifest.txt
// (the manifest with the weights hash filled in) into manifest.out. Throws
// CliError.
void run_generate(const RunManifest& manifest, std::ostream& log);

enum class SweepAxis { gamma, alpha_beta, power };

SweepAxis parse_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);
// Subdirectory name for one swept value, e.g. "gamma_0.01".
std::string sweep_dir_name(SweepAxis axis, double value);
// Copy of `base` with the swept parameter set and `out` pointing at the
// value's subdirectory. alpha_beta sets alpha = value * beta.
RunManifest sweep_variant(const RunManifest& base, SweepAxis axis, double value);

// One run per value (up to `jobs` concurrently) and a labeled side-by-side
// grid.png in base.out.
void run_sweep(const RunManifest& base, SweepAxis axis, const std::vector<double>& values, std::size_t jobs,
               std::ostream& log);

struct DistanceDebugOptions {
  std::filesystem::path content;
  std::filesystem::path out = "out";
  double threshold = 0.5;
  bool invert = false;
  int power = 1;
  bool normalize = false;
};

// Writes mask.png and distance.png into options.out.
void run_distance_debug(const DistanceDebugOptions& options, std::ostream& log);

// Prints each layer's shape and the file CRC-32.
void run_check_weights(const std::filesystem::path& path, std::ostream& log);

// Panels side by side on a white border, each captioned with its label.
Image compose_grid(const std::vector<Image>& panels, const std::vector<std::string>& labels);
// Draws `text` with a built-in 3x5 pixel font; unsupported characters render
// as blanks.
void draw_label(Image& img, std::size_t x, std::size_t y, std::string_view text, std::size_t scale);

}  // namespace dtstyle::cli
