#pragma once

// Shared vocabulary types, error classes and the deterministic parallel loop.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <atomic>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wndkit {

using Real = double;
using Complex = std::complex<double>;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

/// Maximum torus dimension supported by the lattice code.
inline constexpr int kMaxDim = 3;

/// Integer wavevector. Components beyond the lattice dimension are zero.
using Mode = std::array<int, kMaxDim>;

inline constexpr Complex kI{0.0, 1.0};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or lattice mismatch between arguments.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid numerical input (singular transform, nonpositive constants, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or runaway coefficients during time stepping.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, Mode mode, double time)
      : Error(what), mode_(mode), time_(time) {}
  const Mode& mode() const { return mode_; }
  double time() const { return time_; }

 private:
  Mode mode_;
  double time_;
};

inline Vec mode_to_vec(const Mode& m, int d) {
  Vec v(d);
  for (int a = 0; a < d; ++a) v(a) = m[a];
  return v;
}

inline Mode negate(Mode m) {
  for (auto& c : m) c = -c;
  return m;
}

inline Mode add(const Mode& a, const Mode& b) {
  Mode m{};
  for (int i = 0; i < kMaxDim; ++i) m[i] = a[i] + b[i];
  return m;
}

inline std::int64_t norm2(const Mode& m) {
  std::int64_t s = 0;
  for (int c : m) s += static_cast<std::int64_t>(c) * c;
  return s;
}

inline bool is_zero(const Mode& m) {
  return std::all_of(m.begin(), m.end(), [](int c) { return c == 0; });
}

// ---------------------------------------------------------------------------
// Threading. Every parallel loop writes into per-index slots, so results do
// not depend on the thread count.

namespace detail {
inline std::atomic<int>& thread_setting() {
  static std::atomic<int> n{0};
  return n;
}
}  // namespace detail

/// Sets the worker count; 0 means "read WNDKIT_THREADS, default 1".
inline void set_threads(int n) { detail::thread_setting() = std::max(0, n); }

inline int thread_count() {
  int n = detail::thread_setting();
  if (n > 0) return n;
  if (const char* env = std::getenv("WNDKIT_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// Symmetric part of a square matrix.
template <class Derived>
auto sym(const Eigen::MatrixBase<Derived>& m) {
  return (0.5 * (m + m.adjoint())).eval();
}

/// Spectral norm of a real or complex matrix.
template <class Derived>
double op_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<typename Derived::PlainObject> svd(m);
  return svd.singularValues()(0);
}

}  // namespace wndkit
