#pragma once

// Per-wavevector eigenstructure of the advection symbol and the unitary
// group it generates.

#include "wndkit/lattice.hpp"
#include "wndkit/system_spec.hpp"

#include <cmath>
#include <ostream>
#include <vector>

namespace wndkit {

inline constexpr double kDefaultClusterTol = 1e-9;

/// Distinct frequencies omega_j of A(xi) (ascending) with their
/// G-orthogonal spectral projectors P_j. Projectors are real because A(xi)
/// is real; for xi -> -xi the frequencies flip sign and the list reverses.
struct ModeDecomposition {
  Mode xi{};
  Vec symbol;  // the real frequency vector the symbol was evaluated at
  std::vector<double> frequencies;
  std::vector<Mat> projectors;
  /// Columns span range(P_j): G^{-1/2} times orthonormal eigenvectors of the
  /// symmetrized symbol, so they are G-orthonormal.
  std::vector<Mat> bases;
  double cluster_tol = kDefaultClusterTol;

  int count() const { return static_cast<int>(frequencies.size()); }
  int rank(int j) const { return static_cast<int>(bases[j].cols()); }
};

/// Eigenstructure of A(xi) for a real direction, via the Hermitian problem
/// G^{1/2} A(xi) G^{-1/2}.
inline ModeDecomposition decompose_symbol(const SystemSpec& spec, const Vec& xi,
                                          double cluster_tol = kDefaultClusterTol) {
  if (!spec.g_positive_definite())
    throw DomainError("decompose: entropy Hessian is not positive definite");
  const int n = spec.ncomp();
  const Mat a = symbol_advection(spec, xi);
  const Mat s = sym(Mat(spec.g_sqrt() * a * spec.g_inv_sqrt()));
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  if (es.info() != Eigen::Success) throw Error("decompose: symmetric eigensolver did not converge");
  const Vec& lam = es.eigenvalues();
  const Mat& q = es.eigenvectors();
  const double scale = lam.cwiseAbs().maxCoeff();

  ModeDecomposition dec;
  dec.symbol = xi;
  dec.cluster_tol = cluster_tol;
  int start = 0;
  for (int i = 1; i <= n; ++i) {
    const bool split = i == n || (lam(i) - lam(i - 1)) > cluster_tol * scale;
    if (!split) continue;
    const int len = i - start;
    const Mat basis = spec.g_inv_sqrt() * q.middleCols(start, len);
    const Mat sbasis = q.middleCols(start, len);
    dec.frequencies.push_back(lam.segment(start, len).mean());
    dec.projectors.push_back(spec.g_inv_sqrt() * sbasis * sbasis.transpose() * spec.g_sqrt());
    dec.bases.push_back(basis);
    start = i;
  }
  return dec;
}

inline ModeDecomposition decompose(const SystemSpec& spec, const Mode& xi,
                                   double cluster_tol = kDefaultClusterTol) {
  ModeDecomposition dec = decompose_symbol(spec, mode_to_vec(xi, spec.dim()), cluster_tol);
  dec.xi = xi;
  return dec;
}

/// sum_j exp(-i omega_j t) P_j v.
inline CVec evolve_group(const ModeDecomposition& dec, double t, const CVec& v) {
  CVec out = CVec::Zero(v.size());
  for (int j = 0; j < dec.count(); ++j) {
    const Complex phase = std::exp(-kI * (dec.frequencies[j] * t));
    out += phase * (dec.projectors[j].cast<Complex>() * v);
  }
  return out;
}

/// The operator sum_j exp(-i omega_j t) P_j as a matrix.
inline CMat group_matrix(const ModeDecomposition& dec, double t) {
  const auto n = dec.projectors.empty() ? 0 : dec.projectors[0].rows();
  CMat out = CMat::Zero(n, n);
  for (int j = 0; j < dec.count(); ++j)
    out += std::exp(-kI * (dec.frequencies[j] * t)) * dec.projectors[j].cast<Complex>();
  return out;
}

/// Decompositions at every lattice mode, stored in lattice order.
class Spectrum {
 public:
  Spectrum() = default;
  Spectrum(FrequencyLattice lattice, std::vector<ModeDecomposition> modes, double cluster_tol)
      : lattice_(std::move(lattice)), modes_(std::move(modes)), cluster_tol_(cluster_tol) {
    for (const auto& m : modes_)
      for (double w : m.frequencies) omega_max_ = std::max(omega_max_, std::abs(w));
  }

  const FrequencyLattice& lattice() const { return lattice_; }
  const ModeDecomposition& at(std::size_t i) const { return modes_[i]; }
  const ModeDecomposition& at(const Mode& m) const {
    const long i = lattice_.index(m);
    if (i < 0) throw DimensionError("spectrum: mode outside lattice");
    return modes_[static_cast<std::size_t>(i)];
  }
  std::size_t size() const { return modes_.size(); }
  double cluster_tol() const { return cluster_tol_; }
  /// Largest |omega| over all retained modes.
  double omega_max() const { return omega_max_; }

 private:
  FrequencyLattice lattice_;
  std::vector<ModeDecomposition> modes_;
  double cluster_tol_ = kDefaultClusterTol;
  double omega_max_ = 0.0;
};

inline Spectrum frequency_spectrum(const SystemSpec& spec, const FrequencyLattice& lattice,
                                   double cluster_tol = kDefaultClusterTol) {
  if (lattice.dim() != spec.dim()) throw DimensionError("frequency_spectrum: lattice dim != spec dim");
  if (lattice.size() == 0) throw DomainError("frequency_spectrum: empty lattice");
  std::vector<ModeDecomposition> modes(lattice.size());
  parallel_for(lattice.size(), [&](std::size_t i) {
    modes[i] = decompose(spec, lattice.mode(i), cluster_tol);
  });
  return Spectrum(lattice, std::move(modes), cluster_tol);
}

/// CSV: xi components, frequency index, omega, projector rank.
inline void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum) {
  const int d = spectrum.lattice().dim();
  os.precision(17);
  for (int a = 0; a < d; ++a) os << "xi" << a << ',';
  os << "j,omega,rank\n";
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const auto& dec = spectrum.at(i);
    for (int j = 0; j < dec.count(); ++j) {
      for (int a = 0; a < d; ++a) os << dec.xi[a] << ',';
      os << j << ',' << dec.frequencies[j] << ',' << dec.rank(j) << '\n';
    }
  }
}

}  // namespace wndkit
