#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cca/error.hpp"
#include "cca/seed.hpp"

namespace cca {

inline constexpr double kChannelMin = 0.0;
inline constexpr double kChannelMax = 255.0;

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

/// Row-major W x H grid of interleaved r,g,b reals with no range constraint.
/// Used for gradients, tiled images and pre-clamp update results.
class ChannelGrid {
 public:
  ChannelGrid() = default;

  ChannelGrid(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), values_(checked_size(width, height), fill) {}

  ChannelGrid(std::size_t width, std::size_t height, std::vector<double> values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (values_.size() != checked_size(width, height))
      throw Error(ErrorKind::invalid_dimension, "expected " + std::to_string(3 * width * height) +
                                                    " channels, got " + std::to_string(values_.size()));
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  double at(std::size_t x, std::size_t y, std::size_t channel) const { return values_.at(index(x, y, channel)); }
  double& at(std::size_t x, std::size_t y, std::size_t channel) { return values_.at(index(x, y, channel)); }

  std::size_t index(std::size_t x, std::size_t y, std::size_t channel) const noexcept {
    return (y * width_ + x) * 3 + channel;
  }

  bool same_shape(const ChannelGrid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool operator==(const ChannelGrid&) const = default;

 private:
  static std::size_t checked_size(std::size_t width, std::size_t height) {
    if (width == 0 || height == 0)
      throw Error(ErrorKind::invalid_dimension,
                  "grid dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
    return width * height * 3;
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> values_;
};

/// The decision variable: a camouflage texture whose channels all lie in
/// [0, 255]. Channels stay continuous; quantisation happens only on export.
class CamouflagePattern {
 public:
  explicit CamouflagePattern(ChannelGrid grid) : grid_(std::move(grid)) {
    if (grid_.size() == 0) throw Error(ErrorKind::invalid_dimension, "empty pattern");
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const double v = grid_[i];
      if (!(v >= kChannelMin && v <= kChannelMax))
        throw Error(ErrorKind::invalid_color,
                    "channel " + std::to_string(i) + " = " + std::to_string(v) + " outside [0,255]");
    }
  }

  CamouflagePattern(std::size_t width, std::size_t height, std::vector<double> channels)
      : CamouflagePattern(ChannelGrid(width, height, std::move(channels))) {}

  std::size_t width() const noexcept { return grid_.width(); }
  std::size_t height() const noexcept { return grid_.height(); }
  std::size_t channel_count() const noexcept { return grid_.size(); }
  std::span<const double> channels() const noexcept { return grid_.values(); }
  const ChannelGrid& grid() const noexcept { return grid_; }

  double at(std::size_t x, std::size_t y, std::size_t channel) const { return grid_.at(x, y, channel); }

  Rgb pixel(std::size_t x, std::size_t y) const { return {at(x, y, 0), at(x, y, 1), at(x, y, 2)}; }

  std::uint64_t hash() const noexcept {
    return mix_seed(hash_doubles(grid_.values().data(), grid_.size()), {width(), height()});
  }

  bool operator==(const CamouflagePattern&) const = default;

 private:
  ChannelGrid grid_;
};

inline CamouflagePattern new_random(std::size_t width, std::size_t height, std::uint64_t seed) {
  ChannelGrid grid(width, height);
  const SeedStream stream(mix_seed(seed, {width, height}));
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = kChannelMax * stream.unit(i);
  return CamouflagePattern(std::move(grid));
}

inline CamouflagePattern solid(std::size_t width, std::size_t height, Rgb rgb) {
  for (double v : {rgb.r, rgb.g, rgb.b})
    if (!(v >= kChannelMin && v <= kChannelMax))
      throw Error(ErrorKind::invalid_color, "solid color channel " + std::to_string(v) + " outside [0,255]");
  ChannelGrid grid(width, height);
  for (std::size_t p = 0; p < width * height; ++p) {
    grid[3 * p] = rgb.r;
    grid[3 * p + 1] = rgb.g;
    grid[3 * p + 2] = rgb.b;
  }
  return CamouflagePattern(std::move(grid));
}

inline CamouflagePattern clamp(ChannelGrid values) {
  for (double& v : values.values()) {
    if (std::isnan(v))
      v = kChannelMin;
    else
      v = std::min(kChannelMax, std::max(kChannelMin, v));
  }
  return CamouflagePattern(std::move(values));
}

/// Repeats the pattern over a target surface: out(x, y) = pattern(x mod W, y mod H).
inline ChannelGrid tile(const CamouflagePattern& pattern, std::size_t target_width, std::size_t target_height) {
  ChannelGrid out(target_width, target_height);
  for (std::size_t y = 0; y < target_height; ++y)
    for (std::size_t x = 0; x < target_width; ++x)
      for (std::size_t ch = 0; ch < 3; ++ch)
        out[out.index(x, y, ch)] = pattern.at(x % pattern.width(), y % pattern.height(), ch);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: PPM P6 for display plus a JSON sidecar with full precision.

inline nlohmann::json pattern_to_json(const CamouflagePattern& pattern) {
  return {{"width", pattern.width()},
          {"height", pattern.height()},
          {"channels", std::vector<double>(pattern.channels().begin(), pattern.channels().end())}};
}

inline CamouflagePattern pattern_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("width") || !j.contains("height") || !j.contains("channels"))
    throw Error(ErrorKind::parse, "pattern JSON needs width, height and channels");
  const auto& w = j.at("width");
  const auto& h = j.at("height");
  if (!w.is_number_integer() || !h.is_number_integer() || w.get<long long>() < 1 || h.get<long long>() < 1)
    throw Error(ErrorKind::invalid_dimension, "pattern JSON width/height must be positive integers");
  if (!j.at("channels").is_array()) throw Error(ErrorKind::parse, "pattern JSON channels must be an array");
  std::vector<double> channels;
  channels.reserve(j.at("channels").size());
  for (const auto& v : j.at("channels")) {
    if (!v.is_number()) throw Error(ErrorKind::parse, "pattern JSON channels must be numbers");
    channels.push_back(v.get<double>());
  }
  return CamouflagePattern(w.get<std::size_t>(), h.get<std::size_t>(), std::move(channels));
}

inline std::uint8_t to_display_byte(double channel) noexcept {
  return static_cast<std::uint8_t>(std::lround(std::clamp(channel, kChannelMin, kChannelMax)));
}

inline std::string encode_ppm(const CamouflagePattern& pattern) {
  std::string out = "P6\n" + std::to_string(pattern.width()) + " " + std::to_string(pattern.height()) + "\n255\n";
  out.reserve(out.size() + pattern.channel_count());
  for (double v : pattern.channels()) out.push_back(static_cast<char>(to_display_byte(v)));
  return out;
}

inline CamouflagePattern decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto is_space = [](std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; };
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (is_space(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* name) {
    skip_space_and_comments();
    if (pos >= bytes.size()) throw ParseError(pos, std::string("truncated PPM header, expected ") + name);
    if (bytes[pos] < '0' || bytes[pos] > '9') throw ParseError(pos, std::string("expected digits for ") + name);
    std::size_t value = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1'000'000) throw ParseError(pos, std::string(name) + " too large");
      ++pos;
    }
    return value;
  };

  if (bytes.size() < 2) throw ParseError(bytes.size(), "truncated PPM header, expected magic 'P6'");
  if (bytes[0] != 'P' || bytes[1] != '6') throw ParseError(0, "bad magic, expected 'P6'");
  pos = 2;
  const std::size_t width = read_uint("width");
  const std::size_t height = read_uint("height");
  skip_space_and_comments();
  const std::size_t maxval_at = pos;
  const std::size_t maxval = read_uint("maxval");
  if (maxval != 255) throw ParseError(maxval_at, "unsupported maxval " + std::to_string(maxval));
  if (width == 0 || height == 0) throw ParseError(maxval_at, "zero image dimension");
  if (pos >= bytes.size() || !is_space(bytes[pos])) throw ParseError(pos, "truncated PPM header, expected whitespace");
  ++pos;
  const std::size_t need = width * height * 3;
  if (bytes.size() - pos < need)
    throw ParseError(bytes.size(), "truncated raster: need " + std::to_string(need) + " bytes, have " +
                                       std::to_string(bytes.size() - pos));
  std::vector<double> channels(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                               bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return CamouflagePattern(width, height, std::move(channels));
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& ppm_path) {
  auto p = ppm_path;
  p.replace_extension(".json");
  return p;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes `path` (PPM) and its `.json` sidecar.
inline void save(const CamouflagePattern& pattern, const std::filesystem::path& path) {
  write_file(path, encode_ppm(pattern));
  write_file(sidecar_path(path), pattern_to_json(pattern).dump() + "\n");
}

struct LoadedPattern {
  CamouflagePattern pattern;
  bool rounded = false;  // true when no sidecar was found and 8-bit values were used
};

inline LoadedPattern load(const std::filesystem::path& path) {
  const auto sidecar = sidecar_path(path);
  if (std::filesystem::exists(sidecar)) {
    const auto bytes = read_file(sidecar);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.byte, std::string("sidecar ") + sidecar.string() + ": " + e.what());
    }
    return {pattern_from_json(j), false};
  }
  const auto bytes = read_file(path);
  return {decode_ppm(bytes), true};
}

}  // namespace cca
