/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace emotrait {

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto exit codes (see tools/).
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (bad line, unknown key, out-of-range id).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0)
      : Error(line == 0 ? message : message + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a domain contract.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A required input file or artifact is missing.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

/// Internal invariant broken; indicates a bug, not bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic randomness. std::mt19937_64 is fully specified by the
// standard, and all conversions below avoid std::*_distribution (whose
// output is implementation-defined), so byte-identical runs are guaranteed
// across platforms for a fixed seed.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n). Masked rejection sampling.
  std::size_t index(std::size_t n);

  /// Standard normal (Box-Muller, spare cached).
  double normal();

  /// Gamma(alpha, 1) via Marsaglia-Tsang, boosted for alpha < 1.
  double gamma(double alpha);

  /// Dirichlet draw with concentration vector alpha.
  std::vector<double> dirichlet(std::span<const double> alpha);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; used for seed derivation and hashing.
std::uint64_t mix64(std::uint64_t z);

/// Substream seed from a master seed and a path of indices/tags.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

/// FNV-1a 64-bit over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string to_hex(std::uint64_t value);

// ---------------------------------------------------------------------------
// Parallel helper. Results must be written to per-index slots so output is
// independent of scheduling; determinism tests run with 1 and 8 workers.
// ---------------------------------------------------------------------------

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

/// Resolves 0 to the hardware thread count.
int resolve_threads(int requested);

// ---------------------------------------------------------------------------
// Number/string plumbing. format_double emits the shortest representation
// that round-trips exactly (std::to_chars), used everywhere a float crosses
// a file boundary.
// ---------------------------------------------------------------------------

std::string format_double(double value);
double parse_double(std::string_view text, std::size_t line = 0);
long long parse_int(std::string_view text, std::size_t line = 0);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace emotrait
