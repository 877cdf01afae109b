#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace ata {

using Json = nlohmann::json;

/// Raised when a structured-text document cannot be read or parsed.
class DocumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Parses JSON text, rethrowing parser failures as DocumentError with `what`
/// naming the source.
Json parse_json(std::string_view text, std::string_view source = "<memory>");
Json load_json_file(const std::filesystem::path& path);

/// Deterministic 64-bit stream. Draws are reproducible across standard
/// libraries, unlike std::uniform_real_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) { state_ = seed ^ 0x9E3779B97F4A7C15ull; }
  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

 private:
  std::uint64_t state_ = 0;
};

}  // namespace ata
