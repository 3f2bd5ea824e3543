#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace clipita {

/// Base class for every error raised by the library. Callers that only care
/// about "did it work" can catch this; the subclasses narrow the cause.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or record.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Arguments outside an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// FNV-1a, 64-bit: offset basis 0xcbf29ce484222325, prime 0x100000001b3.
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = kFnvOffset;
  for (char ch : bytes) {
    h ^= static_cast<std::uint8_t>(ch);
    h *= kFnvPrime;
  }
  return h;
}

/// SplitMix64 finalizer (Steele, Lea & Flood).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded string hash: mix64(fnv1a64(text) ^ mix64(seed)).
constexpr std::uint64_t hash64(std::string_view text,
                               std::uint64_t seed) noexcept {
  return mix64(fnv1a64(text) ^ mix64(seed));
}

/// Counter-based generator: the i-th draw is mix64(key + (i+1)*golden).
/// Distributions are implemented here rather than taken from <random> so
/// every platform produces the same stream.
class Rng {
 public:
  explicit Rng(std::uint64_t key = 0) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return mix64(key_ + counter_);
  }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer in [0, n). Rejection sampling removes modulo bias.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() noexcept;

  /// Derive an independent stream, e.g. one per epoch.
  Rng fork(std::uint64_t stream) const noexcept {
    return Rng(mix64(key_ ^ mix64(stream + 0x632be59bd9b4e019ULL)));
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Lowercase ASCII and split on every non-alphanumeric byte. Bytes >= 0x80
/// are treated as separators.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace clipita
