#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace streamseg {

// Probabilities are floored before any log so scores stay finite.
inline constexpr double kProbFloor = 1e-12;

// Two path scores closer than this are treated as a tie and resolved by the
// documented deterministic tie-break. Well above accumulation noise (~1e-13
// for the score magnitudes here), well below the gaps random instances
// produce, so the DP decoders and the brute-force oracles agree on ties.
inline constexpr double kScoreTieTol = 1e-11;

inline double log_floored(double p) {
  return std::log(p < kProbFloor ? kProbFloor : p);
}

class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, int line, const std::string& rule)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + rule),
        file_(file),
        line_(line) {}
  const std::string& file() const { return file_; }
  int line() const { return line_; }

 private:
  std::string file_;
  int line_;
};

/// Dense row-major matrix of doubles. Rows are frames, columns are actions
/// (or features) everywhere in this library.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

/// Deterministic RNG used everywhere a seed appears in a contract.
/// mt19937_64 plus fixed transforms, so identical seeds give identical
/// streams regardless of the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
    return static_cast<int>(eng_() % static_cast<uint64_t>(n));
  }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_range(int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("Rng::uniform_range: empty range");
    return lo + uniform_int(hi - lo + 1);
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace streamseg
