#pragma once

// Truncated Fourier coefficient fields and the entropy-weighted norms.

#include "wndkit/lattice.hpp"
#include "wndkit/system_spec.hpp"

#include <cmath>
#include <cstdint>

namespace wndkit {

/// Fourier coefficients W(xi) for every lattice mode, one column per mode in
/// lattice order. Real fields satisfy W(-xi) = conj(W(xi)).
struct SpectralState {
  FrequencyLattice lattice;
  CMat coeffs;  // ncomp x lattice.size()
  double time = 0.0;

  SpectralState() = default;
  SpectralState(FrequencyLattice lat, int ncomp, double t = 0.0)
      : lattice(std::move(lat)), coeffs(CMat::Zero(ncomp, static_cast<Eigen::Index>(lattice.size()))), time(t) {}

  int ncomp() const { return static_cast<int>(coeffs.rows()); }
  std::size_t size() const { return lattice.size(); }
  auto at(std::size_t i) { return coeffs.col(static_cast<Eigen::Index>(i)); }
  auto at(std::size_t i) const { return coeffs.col(static_cast<Eigen::Index>(i)); }

  /// Projects onto real fields: averages each coefficient with the conjugate
  /// of its mirror.
  void enforce_reality() {
    const std::size_t m = size();
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = lattice.negated(i);
      if (j < i) continue;
      if (i == j) {
        coeffs.col(i) = coeffs.col(i).real().cast<Complex>();
        continue;
      }
      const CVec avg = 0.5 * (coeffs.col(i) + coeffs.col(j).conjugate());
      coeffs.col(i) = avg;
      coeffs.col(j) = avg.conjugate();
    }
  }

  /// Largest |W(xi) - conj(W(-xi))| over the lattice.
  double reality_defect() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      worst = std::max(worst, (coeffs.col(i) - coeffs.col(lattice.negated(i)).conjugate()).cwiseAbs().maxCoeff());
    return worst;
  }
};

inline void require_compatible(const SpectralState& a, const SpectralState& b, const char* where) {
  require_same_lattice(a.lattice, b.lattice, where);
  if (a.ncomp() != b.ncomp()) throw DimensionError(std::string(where) + ": component count mismatch");
}

/// (W1 | W2)_H = sum_xi W1(xi)^H G W2(xi).
inline Complex inner(const SystemSpec& spec, const SpectralState& w1, const SpectralState& w2) {
  require_compatible(w1, w2, "inner");
  const CMat g = spec.entropy_hessian().cast<Complex>();
  Complex s = 0.0;
  for (std::size_t i = 0; i < w1.size(); ++i) s += w1.at(i).dot(g * w2.at(i));
  return s;
}

inline double norm_h(const SystemSpec& spec, const SpectralState& w) {
  return std::sqrt(std::max(0.0, inner(spec, w, w).real()));
}

/// |v|_G^2 = v^H G v.
inline double g_norm2(const Mat& g, const CVec& v) { return std::max(0.0, v.dot(g.cast<Complex>() * v).real()); }

/// ( sum_xi (1 + |xi|^2)^s |W(xi)|_G^2 )^{1/2}.
inline double sobolev_norm(const SystemSpec& spec, const SpectralState& w, double s) {
  const Mat& g = spec.entropy_hessian();
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double k2 = static_cast<double>(norm2(w.lattice.mode(i)));
    acc += std::pow(1.0 + k2, s) * g_norm2(g, w.at(i));
  }
  return std::sqrt(acc);
}

/// ||grad W||_{H^s}: the H^s norm with an extra |xi|^2 weight.
inline double gradient_sobolev_norm(const SystemSpec& spec, const SpectralState& w, double s) {
  const Mat& g = spec.entropy_hessian();
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double k2 = static_cast<double>(norm2(w.lattice.mode(i)));
    acc += std::pow(1.0 + k2, s) * k2 * g_norm2(g, w.at(i));
  }
  return std::sqrt(acc);
}

inline SpectralState operator+(SpectralState a, const SpectralState& b) {
  require_compatible(a, b, "add");
  a.coeffs += b.coeffs;
  return a;
}

inline SpectralState operator-(SpectralState a, const SpectralState& b) {
  require_compatible(a, b, "subtract");
  a.coeffs -= b.coeffs;
  return a;
}

inline SpectralState operator*(double s, SpectralState a) {
  a.coeffs *= s;
  return a;
}

// ---------------------------------------------------------------------------
// Reproducible random fields.

/// SplitMix64 used as a counter-based generator: value(seed, counter) is a
/// pure function, so draws do not depend on call order.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t h = splitmix64(splitmix64(seed) ^ (counter * 0xD1B54A32D192ED03ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two counter draws.
inline double counter_normal(std::uint64_t seed, std::uint64_t counter) {
  const double u1 = std::max(counter_uniform(seed, 2 * counter), 1e-300);
  const double u2 = counter_uniform(seed, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Real random field with |W(xi)| ~ (1 + |xi|^2)^{-decay/2}, zero mean mode.
/// Each coefficient draw is keyed by (mode index, component), so the field
/// restricted to a smaller lattice is not the same field; callers that need
/// nesting should build on the larger lattice and restrict.
inline SpectralState random_state(const FrequencyLattice& lattice, int ncomp, std::uint64_t seed,
                                  double decay, bool keep_mean = false) {
  SpectralState w(lattice, ncomp);
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    const Mode& m = lattice.mode(i);
    if (is_zero(m) && !keep_mean) continue;
    const double amp = std::pow(1.0 + static_cast<double>(norm2(m)), -0.5 * decay);
    for (int c = 0; c < ncomp; ++c) {
      const std::uint64_t ctr = (static_cast<std::uint64_t>(i) * ncomp + c) * 2;
      w.coeffs(c, i) = amp * Complex(counter_normal(seed, ctr), counter_normal(seed, ctr + 1));
    }
  }
  w.enforce_reality();
  return w;
}

/// Rescales w so that 1/2 ||w||_H^2 equals energy (no-op for zero fields).
inline void normalize_energy(const SystemSpec& spec, SpectralState& w, double energy) {
  const double n = norm_h(spec, w);
  if (n > 0.0) w.coeffs *= std::sqrt(2.0 * energy) / n;
}

}  // namespace wndkit
