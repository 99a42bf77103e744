#pragma once

#include "wndkit/core.hpp"

#include <string>
#include <vector>

namespace wndkit {

/// Wavevectors of the box [-K, K]^d in lexicographic order. With this
/// ordering the negation of mode i sits at index size() - 1 - i.
class FrequencyLattice {
 public:
  FrequencyLattice() = default;
  FrequencyLattice(int dim, int k) : dim_(dim), k_(k) {
    if (dim < 1 || dim > kMaxDim) throw DimensionError("lattice: dim must be in [1, 3]");
    if (k < 0) throw DomainError("lattice: truncation radius must be nonnegative");
    side_ = 2 * k + 1;
    std::size_t count = 1;
    for (int a = 0; a < dim; ++a) count *= static_cast<std::size_t>(side_);
    modes_.clear();
    modes_.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      Mode m{};
      std::size_t rem = i;
      for (int a = dim - 1; a >= 0; --a) {
        m[a] = static_cast<int>(rem % side_) - k;
        rem /= side_;
      }
      modes_.push_back(m);
    }
  }

  int dim() const { return dim_; }
  int radius() const { return k_; }
  std::size_t size() const { return modes_.size(); }
  const std::vector<Mode>& modes() const { return modes_; }
  const Mode& mode(std::size_t i) const { return modes_[i]; }

  bool contains(const Mode& m) const {
    for (int a = 0; a < kMaxDim; ++a) {
      if (a < dim_) {
        if (m[a] < -k_ || m[a] > k_) return false;
      } else if (m[a] != 0) {
        return false;
      }
    }
    return true;
  }

  /// Index of m, or -1 when m lies outside the box.
  long index(const Mode& m) const {
    if (!contains(m)) return -1;
    long idx = 0;
    for (int a = 0; a < dim_; ++a) idx = idx * side_ + (m[a] + k_);
    return idx;
  }

  std::size_t negated(std::size_t i) const { return modes_.size() - 1 - i; }
  std::size_t zero_index() const { return (modes_.size() - 1) / 2; }

  bool operator==(const FrequencyLattice& o) const { return dim_ == o.dim_ && k_ == o.k_; }

 private:
  int dim_ = 1;
  int k_ = 0;
  int side_ = 1;
  std::vector<Mode> modes_{Mode{}};
};

inline void require_same_lattice(const FrequencyLattice& a, const FrequencyLattice& b,
                                 const char* where) {
  if (!(a == b))
    throw DimensionError(std::string(where) + ": lattice mismatch (d=" + std::to_string(a.dim()) +
                         ",K=" + std::to_string(a.radius()) + " vs d=" + std::to_string(b.dim()) +
                         ",K=" + std::to_string(b.radius()) + ")");
}

}  // namespace wndkit
