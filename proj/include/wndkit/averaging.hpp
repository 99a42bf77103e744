#pragma once

// Averaged diffusion and averaged quadratic operators. Both are evaluated
// from the per-mode spectral projectors; time-average quadratures are kept
// alongside as independent checks.

#include "wndkit/spectral.hpp"
#include "wndkit/state.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

namespace wndkit {

// ---------------------------------------------------------------------------
// Averaged diffusion

/// Dbar(xi) = -sum_j P_j(xi) B(xi) P_j(xi), one real N x N block per mode.
struct AveragedDiffusion {
  FrequencyLattice lattice;
  std::vector<Mat> blocks;

  const Mat& at(std::size_t i) const { return blocks[i]; }
};

inline Mat averaged_diffusion_block(const SystemSpec& spec, const ModeDecomposition& dec) {
  const Mat b = symbol_diffusion(spec, dec.symbol);
  Mat out = Mat::Zero(spec.ncomp(), spec.ncomp());
  for (const Mat& p : dec.projectors) out -= p * b * p;
  return out;
}

inline AveragedDiffusion averaged_diffusion(const SystemSpec& spec, const Spectrum& spectrum) {
  AveragedDiffusion avg{spectrum.lattice(), std::vector<Mat>(spectrum.size())};
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    if (spectrum.at(i).xi != spectrum.lattice().mode(i))
      throw DimensionError("averaged_diffusion: spectrum does not cover the lattice");
    avg.blocks[i] = averaged_diffusion_block(spec, spectrum.at(i));
  }
  return avg;
}

/// Trapezoidal time average of exp(itA(xi)) (-B(xi)) exp(-itA(xi)) over
/// [-T, T]. The propagators come from a matrix exponential, not from the
/// spectral projectors.
inline CMat averaged_diffusion_oracle(const SystemSpec& spec, const Vec& xi, double t_half,
                                      long n_steps) {
  if (!(t_half > 0.0)) throw DomainError("oracle: T must be positive");
  if (n_steps < 100) throw DomainError("oracle: need at least 100 steps");
  const CMat a = symbol_advection(spec, xi).cast<Complex>();
  const CMat minus_b = -symbol_diffusion(spec, xi).cast<Complex>();
  const double h = 2.0 * t_half / static_cast<double>(n_steps);
  const CMat fwd_step = (-kI * h * a).exp();  // exp(-ihA)
  const CMat bwd_step = (kI * h * a).exp();
  CMat fwd = (kI * t_half * a).exp();   // exp(-itA) at t = -T
  CMat bwd = (-kI * t_half * a).exp();  // exp(+itA) at t = -T
  CMat acc = CMat::Zero(a.rows(), a.cols());
  for (long i = 0; i <= n_steps; ++i) {
    const double w = (i == 0 || i == n_steps) ? 0.5 : 1.0;
    acc += w * (bwd * minus_b * fwd);
    fwd = fwd * fwd_step;
    bwd = bwd * bwd_step;
  }
  return acc * (h / (2.0 * t_half));
}

// ---------------------------------------------------------------------------
// Resonance table

struct ResonanceTriple {
  std::uint32_t k = 0, l = 0, m = 0;  // lattice indices, m = k + l
  std::uint8_t j1 = 0, j2 = 0, j3 = 0;
  double defect = 0.0;  // omega_j1(k) + omega_j2(l) - omega_j3(m)
};

/// Exact resonance predicate on (k, j1, l, j2, m, j3) frequency labels.
using ResonanceRule =
    std::function<bool(const Mode& k, int j1, const Mode& l, int j2, const Mode& m, int j3)>;

struct ResonanceTable {
  FrequencyLattice lattice;
  double tolerance = 0.0;
  double omega_scale = 1.0;
  bool exact = false;
  std::vector<ResonanceTriple> triples;  // grouped by m, then k, j1, j2, j3
};

inline ResonanceTable build_resonance_table(const Spectrum& spectrum, double tol,
                                            const ResonanceRule& exact_rule = {}) {
  const FrequencyLattice& lat = spectrum.lattice();
  ResonanceTable table;
  table.lattice = lat;
  table.tolerance = tol;
  table.exact = static_cast<bool>(exact_rule);
  table.omega_scale = spectrum.omega_max() > 0.0 ? spectrum.omega_max() : 1.0;
  const double cutoff = tol * table.omega_scale;

  std::vector<std::vector<ResonanceTriple>> per_m(lat.size());
  parallel_for(lat.size(), [&](std::size_t mi) {
    const Mode& m = lat.mode(mi);
    const auto& dm = spectrum.at(mi);
    auto& out = per_m[mi];
    for (std::size_t ki = 0; ki < lat.size(); ++ki) {
      const Mode& k = lat.mode(ki);
      Mode l{};
      for (int a = 0; a < kMaxDim; ++a) l[a] = m[a] - k[a];
      const long li = lat.index(l);
      if (li < 0) continue;
      const auto& dk = spectrum.at(ki);
      const auto& dl = spectrum.at(static_cast<std::size_t>(li));
      for (int j1 = 0; j1 < dk.count(); ++j1)
        for (int j2 = 0; j2 < dl.count(); ++j2)
          for (int j3 = 0; j3 < dm.count(); ++j3) {
            const double defect = dk.frequencies[j1] + dl.frequencies[j2] - dm.frequencies[j3];
            const bool hit = exact_rule ? exact_rule(k, j1, l, j2, m, j3) : std::abs(defect) <= cutoff;
            if (!hit) continue;
            out.push_back({static_cast<std::uint32_t>(ki), static_cast<std::uint32_t>(li),
                           static_cast<std::uint32_t>(mi), static_cast<std::uint8_t>(j1),
                           static_cast<std::uint8_t>(j2), static_cast<std::uint8_t>(j3), defect});
          }
    }
  });
  std::size_t total = 0;
  for (const auto& v : per_m) total += v.size();
  table.triples.reserve(total);
  for (auto& v : per_m) table.triples.insert(table.triples.end(), v.begin(), v.end());
  return table;
}

/// CSV: k, j1, l, j2, j3, frequency defect (modes as space-separated ints).
inline void write_resonance_csv(std::ostream& os, const ResonanceTable& table) {
  auto mode_str = [&](std::uint32_t i) {
    const Mode& m = table.lattice.mode(i);
    std::string s;
    for (int a = 0; a < table.lattice.dim(); ++a) s += (a ? " " : "") + std::to_string(m[a]);
    return s;
  };
  os.precision(17);
  os << "k,j1,l,j2,j3,defect\n";
  for (const auto& t : table.triples)
    os << mode_str(t.k) << ',' << int(t.j1) << ',' << mode_str(t.l) << ',' << int(t.j2) << ','
       << int(t.j3) << ',' << t.defect << '\n';
}

inline void write_averaged_diffusion(std::ostream& os, const AveragedDiffusion& avg) {
  os.precision(17);
  for (std::size_t i = 0; i < avg.blocks.size(); ++i) {
    const Mode& m = avg.lattice.mode(i);
    os << "# xi =";
    for (int a = 0; a < avg.lattice.dim(); ++a) os << ' ' << m[a];
    os << '\n';
    const Mat& b = avg.blocks[i];
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
      for (Eigen::Index c = 0; c < b.cols(); ++c) os << (c ? "," : "") << b(r, c);
      os << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Averaged quadratic operator

/// Qbar applied through the resonance table. For each output mode m the
/// contracted kernel sum_a m_a Q[a] is kept as a sparse upper-triangle list,
/// and each unordered pair of (mode, branch) inputs is visited once.
class QbarOperator {
 public:
  QbarOperator(const SystemSpec& spec, const Spectrum& spectrum, const ResonanceTable& table)
      : lattice_(spectrum.lattice()), n_(spec.ncomp()) {
    require_same_lattice(lattice_, table.lattice, "Qbar");
    const std::size_t count = lattice_.size();
    branch_offset_.resize(count + 1, 0);
    for (std::size_t i = 0; i < count; ++i)
      branch_offset_[i + 1] = branch_offset_[i] + spectrum.at(i).count();
    projectors_.resize(branch_offset_[count]);
    for (std::size_t i = 0; i < count; ++i)
      for (int j = 0; j < spectrum.at(i).count(); ++j)
        projectors_[branch_offset_[i] + j] = spectrum.at(i).projectors[j].cast<Complex>();

    kernel_offset_.resize(count + 1, 0);
    for (std::size_t mi = 0; mi < count; ++mi) {
      const Mode& m = lattice_.mode(mi);
      for (int nn = 0; nn < n_; ++nn)
        for (int i = 0; i < n_; ++i)
          for (int j = i; j < n_; ++j) {
            double c = 0.0;
            for (int a = 0; a < spec.dim(); ++a) c += m[a] * spec.quadratic(a, nn)(i, j);
            if (c != 0.0) kernel_.push_back({static_cast<std::uint16_t>(nn), static_cast<std::uint16_t>(i),
                                             static_cast<std::uint16_t>(j), c});
          }
      kernel_offset_[mi + 1] = kernel_.size();
    }

    pair_offset_.resize(count + 1, 0);
    std::size_t t = 0;
    for (std::size_t mi = 0; mi < count; ++mi) {
      for (; t < table.triples.size() && table.triples[t].m == mi; ++t) {
        const auto& tr = table.triples[t];
        const std::uint32_t a = branch_offset_[tr.k] + tr.j1;
        const std::uint32_t b = branch_offset_[tr.l] + tr.j2;
        if (a > b) continue;  // the mirrored triple covers this pair
        pairs_.push_back({a, b, static_cast<std::uint32_t>(branch_offset_[mi] + tr.j3)});
      }
      pair_offset_[mi + 1] = pairs_.size();
    }
    if (t != table.triples.size()) throw DimensionError("Qbar: resonance table is not grouped by output mode");
  }

  const FrequencyLattice& lattice() const { return lattice_; }
  std::size_t pair_count() const { return pairs_.size(); }

  /// Qbar(W1, W2), symmetric in its arguments bit for bit.
  SpectralState apply(const SpectralState& w1, const SpectralState& w2) const {
    check(w1);
    check(w2);
    const CMat p1 = project(w1);
    const CMat p2 = project(w2);
    SpectralState out(lattice_, n_, w1.time);
    std::vector<Complex> acc;
    for (std::size_t mi = 0; mi < lattice_.size(); ++mi) {
      acc.assign(static_cast<std::size_t>(branch_offset_[mi + 1] - branch_offset_[mi]) * n_, Complex{});
      for (std::size_t p = pair_offset_[mi]; p < pair_offset_[mi + 1]; ++p) {
        const auto& pr = pairs_[p];
        Complex* dst = acc.data() + static_cast<std::size_t>(pr.out - branch_offset_[mi]) * n_;
        if (pr.a == pr.b) {
          contract(mi, &p1(0, pr.a), &p2(0, pr.b), 1.0, dst);
        } else {
          contract_pair(mi, &p1(0, pr.a), &p2(0, pr.b), &p2(0, pr.a), &p1(0, pr.b), dst);
        }
      }
      finish(mi, acc, out);
    }
    return out;
  }

  /// Qbar(W, W) for a real field; only half the output modes are computed,
  /// the rest follow from reality.
  SpectralState apply_real(const SpectralState& w) const {
    check(w);
    const CMat p = project(w);
    SpectralState out(lattice_, n_, w.time);
    const std::size_t count = lattice_.size();
    const std::size_t first = lattice_.zero_index();
    std::vector<std::vector<Complex>> scratch(count - first);
    parallel_for(count - first, [&](std::size_t r) {
      const std::size_t mi = first + r;
      auto& acc = scratch[r];
      acc.assign(static_cast<std::size_t>(branch_offset_[mi + 1] - branch_offset_[mi]) * n_, Complex{});
      for (std::size_t q = pair_offset_[mi]; q < pair_offset_[mi + 1]; ++q) {
        const auto& pr = pairs_[q];
        Complex* dst = acc.data() + static_cast<std::size_t>(pr.out - branch_offset_[mi]) * n_;
        contract(mi, &p(0, pr.a), &p(0, pr.b), pr.a == pr.b ? 1.0 : 2.0, dst);
      }
    });
    for (std::size_t r = 0; r < count - first; ++r) finish(first + r, scratch[r], out);
    for (std::size_t mi = 0; mi < first; ++mi)
      out.coeffs.col(mi) = out.coeffs.col(lattice_.negated(mi)).conjugate();
    return out;
  }

 private:
  struct Entry {
    std::uint16_t n, i, j;
    double c;
  };
  struct Pair {
    std::uint32_t a, b, out;  // branch slots
  };

  void check(const SpectralState& w) const {
    require_same_lattice(lattice_, w.lattice, "Qbar");
    if (w.ncomp() != n_) throw DimensionError("Qbar: component count mismatch");
  }

  /// Column s = P_j(k) W(k) for branch slot s.
  CMat project(const SpectralState& w) const {
    CMat out(n_, static_cast<Eigen::Index>(projectors_.size()));
    for (std::size_t i = 0; i < lattice_.size(); ++i)
      for (std::uint32_t s = branch_offset_[i]; s < branch_offset_[i + 1]; ++s)
        out.col(s).noalias() = projectors_[s] * w.at(i);
    return out;
  }

  // dst += weight * sum_a m_a Q[a](u, v)
  void contract(std::size_t mi, const Complex* u, const Complex* v, double weight, Complex* dst) const {
    for (std::size_t e = kernel_offset_[mi]; e < kernel_offset_[mi + 1]; ++e) {
      const Entry& k = kernel_[e];
      const Complex uv = k.i == k.j ? u[k.i] * v[k.j] : u[k.i] * v[k.j] + u[k.j] * v[k.i];
      dst[k.n] += (weight * k.c) * uv;
    }
  }

  // Both orderings summed per entry so that swapping the arguments is exact.
  void contract_pair(std::size_t mi, const Complex* u1, const Complex* v1, const Complex* u2, const Complex* v2,
                     Complex* dst) const {
    for (std::size_t e = kernel_offset_[mi]; e < kernel_offset_[mi + 1]; ++e) {
      const Entry& k = kernel_[e];
      const Complex a = k.i == k.j ? u1[k.i] * v1[k.j] : u1[k.i] * v1[k.j] + u1[k.j] * v1[k.i];
      const Complex b = k.i == k.j ? u2[k.i] * v2[k.j] : u2[k.i] * v2[k.j] + u2[k.j] * v2[k.i];
      dst[k.n] += k.c * (a + b);
    }
  }

  // out(m) = i sum_j3 P_j3(m) acc_j3
  void finish(std::size_t mi, const std::vector<Complex>& acc, SpectralState& out) const {
    CVec total = CVec::Zero(n_);
    for (std::uint32_t s = branch_offset_[mi]; s < branch_offset_[mi + 1]; ++s) {
      const Eigen::Map<const CVec> a(acc.data() + static_cast<std::size_t>(s - branch_offset_[mi]) * n_, n_);
      total.noalias() += projectors_[s] * a;
    }
    out.coeffs.col(mi) = kI * total;
  }

  FrequencyLattice lattice_;
  int n_;
  std::vector<std::uint32_t> branch_offset_;
  std::vector<CMat> projectors_;
  std::vector<std::size_t> kernel_offset_;
  std::vector<Entry> kernel_;
  std::vector<std::size_t> pair_offset_;
  std::vector<Pair> pairs_;
};

inline SpectralState apply_Qbar(const SystemSpec& spec, const Spectrum& spectrum,
                                const ResonanceTable& table, const SpectralState& w1,
                                const SpectralState& w2) {
  return QbarOperator(spec, spectrum, table).apply(w1, w2);
}

/// Plain truncated convolution sum_{k+l=m} (i m) . Q(W1(k), W2(l)).
inline SpectralState apply_Q_unaveraged(const SystemSpec& spec, const SpectralState& w1,
                                        const SpectralState& w2) {
  require_compatible(w1, w2, "apply_Q_unaveraged");
  if (w1.ncomp() != spec.ncomp()) throw DimensionError("apply_Q_unaveraged: component count mismatch");
  const FrequencyLattice& lat = w1.lattice;
  const int n = spec.ncomp();
  SpectralState out(lat, n, w1.time);
  for (std::size_t mi = 0; mi < lat.size(); ++mi) {
    const Mode& m = lat.mode(mi);
    if (is_zero(m)) continue;
    std::vector<Mat> qm(n, Mat::Zero(n, n));
    for (int nn = 0; nn < n; ++nn)
      for (int a = 0; a < spec.dim(); ++a) qm[nn] += m[a] * spec.quadratic(a, nn);
    CVec acc = CVec::Zero(n);
    for (std::size_t ki = 0; ki < lat.size(); ++ki) {
      Mode l{};
      for (int a = 0; a < kMaxDim; ++a) l[a] = m[a] - lat.mode(ki)[a];
      const long li = lat.index(l);
      if (li < 0) continue;
      const CVec u = w1.at(ki);
      const CVec v = w2.at(static_cast<std::size_t>(li));
      for (int nn = 0; nn < n; ++nn) acc(nn) += (u.transpose() * (qm[nn].cast<Complex>() * v)).value();
    }
    out.coeffs.col(mi) = kI * acc;
  }
  return out;
}

/// Applies exp(-tA) mode by mode.
inline SpectralState evolve_state(const Spectrum& spectrum, const SpectralState& w, double t) {
  require_same_lattice(spectrum.lattice(), w.lattice, "evolve_state");
  SpectralState out = w;
  for (std::size_t i = 0; i < w.size(); ++i) out.coeffs.col(i) = evolve_group(spectrum.at(i), t, w.at(i));
  return out;
}

/// Trapezoidal time average over [-T, T] of exp(tA) Q(exp(-tA)W1, exp(-tA)W2),
/// with the per-mode propagators taken from matrix exponentials.
inline SpectralState qbar_time_average_oracle(const SystemSpec& spec, const SpectralState& w1,
                                              const SpectralState& w2, double t_half, long n_steps) {
  require_compatible(w1, w2, "qbar oracle");
  if (!(t_half > 0.0) || n_steps < 100) throw DomainError("qbar oracle: need T > 0 and n_steps >= 100");
  const FrequencyLattice& lat = w1.lattice;
  const double h = 2.0 * t_half / static_cast<double>(n_steps);
  std::vector<CMat> step_fwd(lat.size()), step_bwd(lat.size());
  SpectralState a = w1, b = w2;
  std::vector<CMat> bwd(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const CMat sym_a = symbol_advection(spec, mode_to_vec(lat.mode(i), spec.dim())).cast<Complex>();
    step_fwd[i] = (-kI * h * sym_a).exp();
    step_bwd[i] = (kI * h * sym_a).exp();
    const CMat start = (kI * t_half * sym_a).exp();
    a.coeffs.col(i) = start * w1.at(i);
    b.coeffs.col(i) = start * w2.at(i);
    bwd[i] = (-kI * t_half * sym_a).exp();
  }
  SpectralState acc(lat, spec.ncomp());
  for (long s = 0; s <= n_steps; ++s) {
    const double wgt = (s == 0 || s == n_steps) ? 0.5 : 1.0;
    const SpectralState q = apply_Q_unaveraged(spec, a, b);
    for (std::size_t i = 0; i < lat.size(); ++i) {
      acc.coeffs.col(i) += wgt * (bwd[i] * q.at(i));
      a.coeffs.col(i) = step_fwd[i] * a.at(i);
      b.coeffs.col(i) = step_fwd[i] * b.at(i);
      bwd[i] = bwd[i] * step_bwd[i];
    }
  }
  acc.coeffs *= h / (2.0 * t_half);
  return acc;
}

/// |sum of the three cyclic pairings| / largest pairing magnitude.
inline double cyclic_residual(const SystemSpec& spec, const QbarOperator& qbar,
                              const SpectralState& w1, const SpectralState& w2,
                              const SpectralState& w3) {
  const Complex a = inner(spec, w1, qbar.apply(w2, w3));
  const Complex b = inner(spec, w2, qbar.apply(w3, w1));
  const Complex c = inner(spec, w3, qbar.apply(w1, w2));
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (scale == 0.0) return 0.0;
  return std::abs(a + b + c) / scale;
}

inline double cyclic_residual(const SystemSpec& spec, const Spectrum& spectrum,
                              const ResonanceTable& table, const SpectralState& w1,
                              const SpectralState& w2, const SpectralState& w3) {
  return cyclic_residual(spec, QbarOperator(spec, spectrum, table), w1, w2, w3);
}

/// Dbar W mode by mode.
inline SpectralState apply_Dbar(const AveragedDiffusion& avg, const SpectralState& w) {
  require_same_lattice(avg.lattice, w.lattice, "apply_Dbar");
  SpectralState out = w;
  for (std::size_t i = 0; i < w.size(); ++i) out.coeffs.col(i) = avg.blocks[i].cast<Complex>() * w.at(i);
  return out;
}

}  // namespace wndkit
