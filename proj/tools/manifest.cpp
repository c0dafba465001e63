#include "manifest.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace dtstyle::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ManifestError("manifest key '" + std::string(key) + "': cannot parse '" + std::string(value) + "' as " +
                      expected);
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
  return out;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v, int base = 10) {
  Int out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "an integer");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(key, v, "true or false");
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::string join(std::span<const double> items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + format_double(items[i]);
  return out;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void set_field(RunManifest& m, std::string_view key, std::string_view value) {
  if (key == "content") {
    m.content = std::string(value);
  } else if (key == "style") {
    m.style = std::string(value);
  } else if (key == "out") {
    m.out = std::string(value);
  } else if (key == "weights") {
    m.weights = std::string(value);
  } else if (key == "weights_hash") {
    if (value.size() != 8) bad_value(key, value, "8 hex digits");
    m.weights_hash = parse_int<std::uint32_t>(key, value, 16);
  } else if (key == "resolution") {
    const auto x = value.find('x');
    if (x == std::string_view::npos) {
      m.width = m.height = parse_int<std::size_t>(key, value);
    } else {
      m.width = parse_int<std::size_t>(key, value.substr(0, x));
      m.height = parse_int<std::size_t>(key, value.substr(x + 1));
    }
    if (m.width == 0 || m.height == 0) bad_value(key, value, "a positive resolution");
  } else if (key == "threshold") {
    m.threshold = parse_double(key, value);
  } else if (key == "invert") {
    m.invert = parse_bool(key, value);
  } else if (key == "normalize_distance") {
    m.normalize_distance = parse_bool(key, value);
  } else if (key == "alpha") {
    m.alpha = parse_double(key, value);
  } else if (key == "beta") {
    m.beta = parse_double(key, value);
  } else if (key == "gamma") {
    m.gamma = parse_double(key, value);
  } else if (key == "power") {
    m.power = parse_int<int>(key, value);
  } else if (key == "content_layer") {
    m.content_layer = std::string(value);
  } else if (key == "style_layers") {
    m.style_layers.clear();
    for (std::string_view part : split(value, ',')) {
      if (part.empty()) bad_value(key, value, "a comma-separated layer list");
      m.style_layers.emplace_back(part);
    }
  } else if (key == "style_weights") {
    m.style_weights.clear();
    if (!value.empty()) {
      for (std::string_view part : split(value, ',')) m.style_weights.push_back(parse_double(key, part));
    }
  } else if (key == "pool") {
    if (value == "max") {
      m.pool = PoolMode::max;
    } else if (value == "average") {
      m.pool = PoolMode::average;
    } else {
      bad_value(key, value, "max or average");
    }
  } else if (key == "channel_order") {
    if (value == "rgb") {
      m.preprocess.channel_order = ChannelOrder::rgb;
    } else if (value == "bgr") {
      m.preprocess.channel_order = ChannelOrder::bgr;
    } else {
      bad_value(key, value, "rgb or bgr");
    }
  } else if (key == "channel_mean") {
    const auto parts = split(value, ',');
    if (parts.size() != 3) bad_value(key, value, "three comma-separated numbers");
    for (std::size_t i = 0; i < 3; ++i) m.preprocess.channel_mean[i] = parse_double(key, parts[i]);
  } else if (key == "iterations") {
    m.optim.iterations = parse_int<std::size_t>(key, value);
  } else if (key == "lr") {
    m.optim.learning_rate = parse_double(key, value);
  } else if (key == "adam_beta1") {
    m.optim.adam_beta1 = parse_double(key, value);
  } else if (key == "adam_beta2") {
    m.optim.adam_beta2 = parse_double(key, value);
  } else if (key == "adam_epsilon") {
    m.optim.adam_epsilon = parse_double(key, value);
  } else if (key == "snapshot_every") {
    m.optim.snapshot_every = parse_int<std::size_t>(key, value);
  } else if (key == "seed") {
    m.optim.seed = parse_int<std::uint64_t>(key, value);
  } else {
    throw ManifestError("unknown manifest key '" + std::string(key) + "'");
  }
}

RunManifest parse_manifest(std::string_view text) {
  RunManifest m;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ManifestError("manifest line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.emplace(key).second) throw ManifestError("duplicate manifest key '" + std::string(key) + "'");
    set_field(m, key, value);
  }
  return m;
}

RunManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot read manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

std::string to_text(const RunManifest& m) {
  std::ostringstream out;
  out << "# dtstyle run manifest\n";
  out << "content = " << m.content.string() << "\n";
  out << "style = " << m.style.string() << "\n";
  out << "out = " << m.out.string() << "\n";
  out << "weights = " << m.weights.string() << "\n";
  if (m.weights_hash) {
    char hex[9];
    std::snprintf(hex, sizeof(hex), "%08x", *m.weights_hash);
    out << "weights_hash = " << hex << "\n";
  }
  out << "resolution = " << m.width << "x" << m.height << "\n";
  out << "threshold = " << format_double(m.threshold) << "\n";
  out << "invert = " << (m.invert ? "true" : "false") << "\n";
  out << "normalize_distance = " << (m.normalize_distance ? "true" : "false") << "\n";
  out << "alpha = " << format_double(m.alpha) << "\n";
  out << "beta = " << format_double(m.beta) << "\n";
  out << "gamma = " << format_double(m.gamma) << "\n";
  out << "power = " << m.power << "\n";
  out << "content_layer = " << m.content_layer << "\n";
  out << "style_layers = " << join(m.style_layers) << "\n";
  out << "style_weights = " << join(m.style_weights) << "\n";
  out << "pool = " << (m.pool == PoolMode::max ? "max" : "average") << "\n";
  out << "channel_order = " << (m.preprocess.channel_order == ChannelOrder::bgr ? "bgr" : "rgb") << "\n";
  out << "channel_mean = " << join(m.preprocess.channel_mean) << "\n";
  out << "iterations = " << m.optim.iterations << "\n";
  out << "lr = " << format_double(m.optim.learning_rate) << "\n";
  out << "adam_beta1 = " << format_double(m.optim.adam_beta1) << "\n";
  out << "adam_beta2 = " << format_double(m.optim.adam_beta2) << "\n";
  out << "adam_epsilon = " << format_double(m.optim.adam_epsilon) << "\n";
  out << "snapshot_every = " << m.optim.snapshot_every << "\n";
  out << "seed = " << m.optim.seed << "\n";
  return out.str();
}

}  // namespace dtstyle::cli
