#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gda {

// Error hierarchy; the CLI maps these onto stable exit codes
// (2 = I/O or data, 3 = configuration, 4 = numeric, 5 = divergence).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct InvalidInputError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct ShapeError : ConfigError {
  using ConfigError::ConfigError;
};
struct NumericError : Error {
  using Error::Error;
};
struct CheckpointError : Error {
  using Error::Error;
};
struct TrainingError : Error {
  using Error::Error;
};

/// Dense row-major tensor. Rank is the length of `shape`; most operations
/// treat the value as a matrix of rows() x cols(), where cols() is the
/// trailing dimension and rows() the product of the leading ones.
template <class T>
struct Tensor {
  std::vector<long> shape;
  std::vector<T> data;

  Tensor() = default;
  Tensor(long r, long c) : shape{r, c}, data(static_cast<size_t>(r * c), T(0)) {}
  explicit Tensor(std::vector<long> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel_of(shape)), T(0));
  }

  static long numel_of(const std::vector<long>& s) {
    long n = s.empty() ? 0 : 1;
    for (long d : s) n *= d;
    return n;
  }

  long numel() const { return static_cast<long>(data.size()); }
  long rows() const {
    if (shape.empty()) return 0;
    long r = 1;
    for (size_t i = 0; i + 1 < shape.size(); ++i) r *= shape[i];
    return r;
  }
  long cols() const { return shape.empty() ? 0 : shape.back(); }

  T* row(long i) { return data.data() + i * cols(); }
  const T* row(long i) const { return data.data() + i * cols(); }
  T& operator()(long i, long j) { return data[static_cast<size_t>(i * cols() + j)]; }
  const T& operator()(long i, long j) const { return data[static_cast<size_t>(i * cols() + j)]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

inline std::string shape_str(const std::vector<long>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

template <class T>
void require_shape(const Tensor<T>& t, long r, long c, const char* what) {
  if (t.rows() != r || t.cols() != c)
    throw ShapeError(std::string(what) + ": expected " + std::to_string(r) + "x" +
                     std::to_string(c) + ", got " + shape_str(t.shape));
}

/// Deterministic random stream. mt19937_64 plus explicit draw algorithms,
/// so identical seeds give identical values on every platform and compiler.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) {
    return uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  template <class V>
  void shuffle(std::vector<V>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Derive an independent stream, e.g. per sample or per epoch.
  Rng fork(uint64_t stream) const {
    uint64_t mixed = seed_ * 0x9E3779B97F4A7C15ull + stream * 0xBF58476D1CE4E5B9ull +
                     0x94D049BB133111EBull;
    mixed ^= mixed >> 31;
    return Rng(mixed);
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace gda
