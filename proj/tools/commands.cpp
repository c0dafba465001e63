#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "dtstyle/distance_field.hpp"
#include "dtstyle/extractor.hpp"
#include "dtstyle/optimizer.hpp"
#include "dtstyle/weights_file.hpp"

namespace dtstyle::cli {

namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& path, const char* what) {
  std::error_code ec;
  if (path.empty() || !fs::is_regular_file(path, ec)) {
    throw CliError(ErrorCategory::input_missing, std::string(what) + " not found: " + path.string());
  }
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

// Number of 2x pools executed before the deepest of `layers`.
std::size_t pools_before(const NetworkSpec& spec, const std::vector<std::string>& layers) {
  std::size_t deepest = 0;
  for (const std::string& name : layers) deepest = std::max(deepest, spec.feature_stage(name));
  std::size_t pools = 0;
  for (std::size_t i = 0; i <= deepest; ++i) pools += spec.stages()[i].kind == StageKind::pool;
  return pools;
}

Image load_input(const fs::path& path) {
  try {
    return load_image(path);
  } catch (const ImageError& e) {
    throw CliError(e.kind() == ImageError::Kind::unreadable ? ErrorCategory::input_missing
                                                             : ErrorCategory::input_invalid,
                   e.what());
  }
}

// Rows 3..7 of each glyph are unused; each row is three bits, MSB = left.
struct Glyph {
  char ch;
  std::uint8_t rows[5];
};

constexpr Glyph kFont[] = {
    {'0', {0b111, 0b101, 0b101, 0b101, 0b111}}, {'1', {0b010, 0b110, 0b010, 0b010, 0b111}},
    {'2', {0b111, 0b001, 0b111, 0b100, 0b111}}, {'3', {0b111, 0b001, 0b111, 0b001, 0b111}},
    {'4', {0b101, 0b101, 0b111, 0b001, 0b001}}, {'5', {0b111, 0b100, 0b111, 0b001, 0b111}},
    {'6', {0b111, 0b100, 0b111, 0b101, 0b111}}, {'7', {0b111, 0b001, 0b010, 0b010, 0b010}},
    {'8', {0b111, 0b101, 0b111, 0b101, 0b111}}, {'9', {0b111, 0b101, 0b111, 0b001, 0b111}},
    {'.', {0b000, 0b000, 0b000, 0b000, 0b010}}, {'-', {0b000, 0b000, 0b111, 0b000, 0b000}},
    {'+', {0b000, 0b010, 0b111, 0b010, 0b000}}, {'=', {0b000, 0b111, 0b000, 0b111, 0b000}},
    {'/', {0b001, 0b001, 0b010, 0b100, 0b100}}, {'e', {0b000, 0b111, 0b111, 0b100, 0b111}},
    {'a', {0b000, 0b011, 0b101, 0b101, 0b011}}, {'b', {0b100, 0b110, 0b101, 0b101, 0b110}},
    {'g', {0b011, 0b101, 0b011, 0b001, 0b110}}, {'n', {0b000, 0b110, 0b101, 0b101, 0b101}},
};

const Glyph* find_glyph(char ch) {
  for (const Glyph& g : kFont) {
    if (g.ch == ch) return &g;
  }
  return nullptr;
}

std::string panel_label(SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::gamma: return "g=" + format_double(value);
    case SweepAxis::alpha_beta: return "a/b=" + format_double(value);
    case SweepAxis::power: return "n=" + format_double(value);
  }
  return format_double(value);
}

}  // namespace

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::bad_arguments: return "bad-arguments";
    case ErrorCategory::input_missing: return "input-missing";
    case ErrorCategory::input_invalid: return "input-invalid";
    case ErrorCategory::weight_file: return "weight-file";
    case ErrorCategory::runtime: return "runtime";
  }
  return "runtime";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::bad_arguments: return kExitBadArguments;
    case ErrorCategory::input_missing:
    case ErrorCategory::input_invalid: return kExitMissingInput;
    case ErrorCategory::weight_file: return kExitWeightFile;
    case ErrorCategory::runtime: return kExitRuntime;
  }
  return kExitRuntime;
}

CliError classify(const std::exception& e) {
  if (const auto* cli = dynamic_cast<const CliError*>(&e)) return *cli;
  if (dynamic_cast<const ManifestError*>(&e)) return {ErrorCategory::bad_arguments, e.what()};
  if (dynamic_cast<const WeightFileError*>(&e)) return {ErrorCategory::weight_file, e.what()};
  if (const auto* img = dynamic_cast<const ImageError*>(&e)) {
    return {img->kind() == ImageError::Kind::unreadable ? ErrorCategory::input_missing
                                                         : ErrorCategory::input_invalid,
            e.what()};
  }
  if (dynamic_cast<const std::invalid_argument*>(&e)) return {ErrorCategory::bad_arguments, e.what()};
  return {ErrorCategory::runtime, e.what()};
}

int report_error(const std::exception& e, std::ostream& err) {
  const CliError c = classify(e);
  std::string message = c.what();
  std::replace(message.begin(), message.end(), '\n', ' ');
  err << "error: " << to_string(c.category()) << ": " << message << "\n";
  return exit_code(c.category());
}

std::string snapshot_name(std::size_t iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snap_%06zu.png", iteration);
  return buf;
}

void run_generate(const RunManifest& manifest, std::ostream& log) {
  require_file(manifest.content, "content image");
  require_file(manifest.style, "style image");
  require_file(manifest.weights, "weight file");
  try {
    manifest.preprocess.validate();
    manifest.optim.validate();
  } catch (const std::invalid_argument& e) {
    throw CliError(ErrorCategory::bad_arguments, e.what());
  }
  if (manifest.power < 1) throw CliError(ErrorCategory::bad_arguments, "power must be >= 1");
  if (!manifest.style_weights.empty() && manifest.style_weights.size() != manifest.style_layers.size()) {
    throw CliError(ErrorCategory::bad_arguments, "style_weights must have one entry per style layer");
  }

  NetworkWeights weights = load_weights(manifest.weights);
  const std::uint32_t hash = file_crc32(manifest.weights);
  if (manifest.weights_hash && *manifest.weights_hash != hash) {
    throw CliError(ErrorCategory::weight_file, "weights hash " + hex32(hash) + " differs from manifest value " +
                                                   hex32(*manifest.weights_hash));
  }
  NetworkSpec spec = NetworkSpec::from_weights(weights, manifest.pool);
  std::vector<std::string> layers = manifest.style_layers;
  layers.push_back(manifest.content_layer);
  for (const std::string& name : layers) {
    if (!spec.has_layer(name)) {
      throw CliError(ErrorCategory::bad_arguments, "layer " + name + " is not in the network of " +
                                                       manifest.weights.string());
    }
  }
  const std::size_t multiple = std::size_t{1} << pools_before(spec, layers);
  if (manifest.width % multiple != 0 || manifest.height % multiple != 0) {
    throw CliError(ErrorCategory::bad_arguments,
                   "resolution must be a multiple of " + std::to_string(multiple) + " for the requested layers");
  }
  const FeatureExtractor extractor(std::move(weights), std::move(spec));

  const Image content_img = resize_bilinear(load_input(manifest.content), manifest.width, manifest.height);
  const Image style_img = resize_bilinear(load_input(manifest.style), manifest.width, manifest.height);

  const BinaryMask mask = binarize(content_img, manifest.threshold, manifest.invert);
  if (mask.count() == 0) {
    throw CliError(ErrorCategory::input_invalid, "content image has no silhouette pixels at threshold " +
                                                     format_double(manifest.threshold));
  }

  TransferProblem problem;
  problem.content = to_tensor(content_img, manifest.preprocess);
  problem.style = to_tensor(style_img, manifest.preprocess);
  problem.field = emphasize(edt(mask), manifest.power, manifest.normalize_distance);
  problem.content_layer = manifest.content_layer;
  problem.weights.alpha = manifest.alpha;
  problem.weights.beta = manifest.beta;
  problem.weights.gamma = manifest.gamma;
  problem.weights.emphasis_power = manifest.power;
  if (manifest.style_weights.empty()) {
    problem.weights.style_layer_weights = LossWeights::uniform(manifest.style_layers);
  } else {
    for (std::size_t i = 0; i < manifest.style_layers.size(); ++i) {
      problem.weights.style_layer_weights[manifest.style_layers[i]] = manifest.style_weights[i];
    }
  }
  try {
    problem.weights.validate();
  } catch (const std::invalid_argument& e) {
    throw CliError(ErrorCategory::bad_arguments, e.what());
  }

  std::error_code ec;
  fs::create_directories(manifest.out, ec);
  if (ec) throw CliError(ErrorCategory::runtime, "cannot create output directory " + manifest.out.string());

  RunManifest echo = manifest;
  echo.weights_hash = hash;
  {
    std::ofstream out(manifest.out / kManifestEcho);
    out << to_text(echo);
  }

  std::ofstream csv(manifest.out / kLossCsv);
  csv << "iteration,content,style,distance,total\n";
  auto write_row = [&csv](std::size_t it, const LossReport& r) {
    csv << it << ',' << format_double(r.content) << ',' << format_double(r.style) << ','
        << format_double(r.distance) << ',' << format_double(r.total) << '\n';
  };

  RunHooks hooks;
  hooks.keep_snapshots = false;
  hooks.on_progress = write_row;
  hooks.on_snapshot = [&](std::size_t it, const Tensor3& x) {
    save_png(manifest.out / snapshot_name(it), from_tensor(x, manifest.preprocess));
  };

  RunResult result;
  try {
    result = run(extractor, problem, manifest.optim, hooks);
  } catch (const ImageError& e) {
    throw CliError(ErrorCategory::runtime, e.what());
  } catch (const std::exception& e) {
    throw CliError(ErrorCategory::runtime, e.what());
  }
  write_row(manifest.optim.iterations, result.final_loss);
  csv.close();
  if (!csv) throw CliError(ErrorCategory::runtime, "cannot write " + (manifest.out / kLossCsv).string());

  save_png(manifest.out / kResultPng, from_tensor(result.image, manifest.preprocess));
  log << "wrote " << (manifest.out / kResultPng).string() << " (total loss " << format_double(result.trace.front().total)
      << " -> " << format_double(result.final_loss.total) << ")\n";
}

SweepAxis parse_axis(std::string_view name) {
  if (name == "gamma") return SweepAxis::gamma;
  if (name == "alpha_beta") return SweepAxis::alpha_beta;
  if (name == "power") return SweepAxis::power;
  throw CliError(ErrorCategory::bad_arguments, "unknown sweep axis '" + std::string(name) + "'");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::gamma: return "gamma";
    case SweepAxis::alpha_beta: return "alpha_beta";
    case SweepAxis::power: return "power";
  }
  return "gamma";
}

std::string sweep_dir_name(SweepAxis axis, double value) {
  return std::string(to_string(axis)) + "_" + format_double(value);
}

RunManifest sweep_variant(const RunManifest& base, SweepAxis axis, double value) {
  RunManifest m = base;
  switch (axis) {
    case SweepAxis::gamma:
      m.gamma = value;
      break;
    case SweepAxis::alpha_beta:
      m.alpha = value * base.beta;
      break;
    case SweepAxis::power:
      if (!(value >= 1.0) || std::floor(value) != value) {
        throw CliError(ErrorCategory::bad_arguments, "power values must be integers >= 1");
      }
      m.power = static_cast<int>(value);
      break;
  }
  m.out = base.out / sweep_dir_name(axis, value);
  return m;
}

void run_sweep(const RunManifest& base, SweepAxis axis, const std::vector<double>& values, std::size_t jobs,
               std::ostream& log) {
  if (values.size() < 2) throw CliError(ErrorCategory::bad_arguments, "a sweep needs at least two values");
  std::vector<RunManifest> variants;
  for (double v : values) variants.push_back(sweep_variant(base, axis, v));

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::optional<CliError> failure;
  std::vector<std::string> logs(variants.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < variants.size(); i = next++) {
      std::ostringstream run_log;
      try {
        run_generate(variants[i], run_log);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (!failure) failure = classify(e);
      }
      logs[i] = run_log.str();
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t n = std::clamp<std::size_t>(jobs, 1, variants.size());
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (const std::string& s : logs) log << s;
  if (failure) throw *failure;

  std::vector<Image> panels;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    panels.push_back(load_image(variants[i].out / kResultPng));
    labels.push_back(panel_label(axis, values[i]));
  }
  save_png(base.out / kGridPng, compose_grid(panels, labels));
  log << "wrote " << (base.out / kGridPng).string() << " (" << panels.size() << " panels)\n";
}

void run_distance_debug(const DistanceDebugOptions& options, std::ostream& log) {
  require_file(options.content, "content image");
  if (options.power < 1) throw CliError(ErrorCategory::bad_arguments, "power must be >= 1");
  const Image content = load_input(options.content);
  const BinaryMask mask = binarize(content, options.threshold, options.invert);
  if (mask.count() == 0) throw CliError(ErrorCategory::input_invalid, "content image has no silhouette pixels");
  const DistanceField field = emphasize(edt(mask), options.power, options.normalize);

  std::error_code ec;
  fs::create_directories(options.out, ec);
  if (ec) throw CliError(ErrorCategory::runtime, "cannot create output directory " + options.out.string());
  save_png(options.out / kMaskPng, render_mask(mask));
  save_png(options.out / kDistancePng, render_field(field));
  const double max_value = *std::max_element(field.values.begin(), field.values.end());
  log << "silhouette pixels " << mask.count() << " of " << mask.bits.size() << ", max field value "
      << format_double(max_value) << "\n";
}

void run_check_weights(const fs::path& path, std::ostream& log) {
  require_file(path, "weight file");
  const NetworkWeights weights = load_weights(path);
  for (const ConvLayer& layer : weights.layers) {
    log << layer.name << " " << layer.out_channels << "x" << layer.in_channels << "x3x3\n";
  }
  log << "layers " << weights.layers.size() << "\n";
  log << "crc32 " << hex32(file_crc32(path)) << "\n";
}

void draw_label(Image& img, std::size_t x, std::size_t y, std::string_view text, std::size_t scale) {
  std::size_t pen = x;
  for (char ch : text) {
    if (const Glyph* g = find_glyph(ch)) {
      for (std::size_t row = 0; row < 5; ++row) {
        for (std::size_t col = 0; col < 3; ++col) {
          if (!(g->rows[row] & (0b100 >> col))) continue;
          for (std::size_t sy = 0; sy < scale; ++sy) {
            for (std::size_t sx = 0; sx < scale; ++sx) {
              const std::size_t px = pen + col * scale + sx;
              const std::size_t py = y + row * scale + sy;
              if (px >= img.width() || py >= img.height()) continue;
              for (std::size_t c = 0; c < 3; ++c) img.at(px, py, c) = 0;
            }
          }
        }
      }
    }
    pen += 4 * scale;
  }
}

Image compose_grid(const std::vector<Image>& panels, const std::vector<std::string>& labels) {
  if (panels.empty() || panels.size() != labels.size()) {
    throw std::invalid_argument("compose_grid: need one label per panel");
  }
  constexpr std::size_t kBorder = 8;
  std::size_t width = kBorder;
  std::size_t panel_height = 0;
  for (const Image& p : panels) {
    width += p.width() + kBorder;
    panel_height = std::max(panel_height, p.height());
  }
  const std::size_t scale = std::clamp<std::size_t>(panels.front().width() / 64, 1, 4);
  const std::size_t label_height = 5 * scale + kBorder;
  Image grid(width, panel_height + label_height + 2 * kBorder, std::array<std::uint8_t, 3>{255, 255, 255});

  std::size_t x0 = kBorder;
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const Image& p = panels[i];
    for (std::size_t y = 0; y < p.height(); ++y) {
      for (std::size_t x = 0; x < p.width(); ++x) {
        for (std::size_t c = 0; c < 3; ++c) grid.at(x0 + x, kBorder + y, c) = p.at(x, y, c);
      }
    }
    draw_label(grid, x0, kBorder + panel_height + kBorder / 2, labels[i], scale);
    x0 += p.width() + kBorder;
  }
  return grid;
}

}  // namespace dtstyle::cli
