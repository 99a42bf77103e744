#pragma once

#include "wndkit/wndkit.hpp"

#include <cmath>

namespace wndkit::testing {

template <class A, class B>
double rel_diff(const A& a, const B& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

inline double rel_diff_states(const SystemSpec& spec, const SpectralState& a, const SpectralState& b) {
  const double scale = std::max(norm_h(spec, a), norm_h(spec, b));
  return scale == 0.0 ? 0.0 : norm_h(spec, a - b) / scale;
}

inline ResonanceRule exact_cns_rule_for(const Spectrum& s) { return ns::cns_exact_rule(s); }

/// Operators for the ideal-gas preset with the exact resonance rule.
inline Operators cns_operators(int d, int k, const ns::TransportCoefficients& tr = {1.0, 0.0, 1.0, 3.0}) {
  return build_operators(ns::cns_preset(d, tr), k, kDefaultResonanceTol, exact_cns_rule_for);
}

/// A fixed, well-conditioned random matrix for change-of-variables checks.
inline Mat random_transform(int n, std::uint64_t seed) {
  Mat t(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t(i, j) = 0.3 * counter_normal(seed, static_cast<std::uint64_t>(i * n + j));
  return t + Mat::Identity(n, n);
}

/// T^{-1} W per mode.
inline SpectralState transform_state(const Mat& tinv, const SpectralState& w) {
  SpectralState out = w;
  for (std::size_t i = 0; i < w.size(); ++i) out.coeffs.col(i) = tinv.cast<Complex>() * w.at(i);
  return out;
}

}  // namespace wndkit::testing
