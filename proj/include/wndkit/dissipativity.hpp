#pragma once

// Kawashima condition, the strict-dissipativity criterion and the decay
// rate it certifies for the averaged diffusion.

#include "wndkit/averaging.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace wndkit {

inline constexpr double kKawashimaTol = 1e-10;
inline constexpr int kFibonacciDirections = 200;

struct KawashimaWitness {
  Vec direction;
  double frequency = 0.0;
  Vec eigenvector;  // annihilated by B(direction)
  double residual = 0.0;
};

struct KawashimaResult {
  bool ok = true;
  std::vector<KawashimaWitness> witnesses;
};

/// For each direction and each eigenspace of A(xi), the smallest singular
/// value of B(xi) restricted to the eigenspace (G-orthonormal basis) must
/// stay above tol * |B(xi)|. Using the whole eigenspace rather than single
/// eigenvectors makes the answer independent of the basis chosen inside
/// degenerate eigenspaces.
inline KawashimaResult kawashima_check(const SystemSpec& spec, const std::vector<Vec>& directions,
                                       double tol = kKawashimaTol) {
  if (directions.empty()) throw DomainError("kawashima_check: no directions");
  KawashimaResult res;
  for (const Vec& xi : directions) {
    const ModeDecomposition dec = decompose_symbol(spec, xi);
    const Mat b = symbol_diffusion(spec, xi);
    const double bnorm = op_norm(b);
    for (int j = 0; j < dec.count(); ++j) {
      const Mat& basis = dec.bases[j];
      Eigen::JacobiSVD<Mat> svd(b * basis, Eigen::ComputeFullV);
      const Vec& sv = svd.singularValues();
      const Eigen::Index last = basis.cols() - 1;
      const double smin = sv.size() > last ? sv(last) : 0.0;
      if (smin <= tol * bnorm || bnorm == 0.0) {
        res.ok = false;
        Vec v = basis * svd.matrixV().col(last);
        res.witnesses.push_back({xi, dec.frequencies[j], v, smin});
      }
    }
  }
  return res;
}

/// Unit directions xi/|xi| of all nonzero lattice modes plus a Fibonacci set.
inline std::vector<Vec> dissipativity_directions(const FrequencyLattice& lattice,
                                                 int n_fibonacci = kFibonacciDirections) {
  std::vector<Vec> dirs;
  for (const Mode& m : lattice.modes()) {
    if (is_zero(m)) continue;
    const Vec v = mode_to_vec(m, lattice.dim());
    dirs.push_back(v / v.norm());
  }
  const auto extra = sample_directions(lattice.dim(), n_fibonacci);
  dirs.insert(dirs.end(), extra.begin(), extra.end());
  return dirs;
}

/// |M|_G = |G^{1/2} M G^{-1/2}|_2.
inline double g_operator_norm(const SystemSpec& spec, const Mat& m) {
  return op_norm(Mat(spec.g_sqrt() * m * spec.g_inv_sqrt()));
}

/// Smallest eigenvalue of G B(xi) + alpha^-2 A(xi)^T G B(xi) A(xi) relative to G.
inline double criterion_beta(const SystemSpec& spec, const Vec& xi, double alpha) {
  const Mat& g = spec.entropy_hessian();
  const Mat a = symbol_advection(spec, xi);
  const Mat gb = g * symbol_diffusion(spec, xi);
  const Mat m = sym(Mat(gb + (a.transpose() * gb * a) / (alpha * alpha)));
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(m, g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

struct DeltaPair {
  double epsilon = 0.0;
  double delta = 0.0;
};

/// epsilon at its cap alpha^4 beta / (alpha^4 beta + C_A^4 C_B) * beta / 4,
/// and delta = alpha^2 beta epsilon / (2 C_A^2 C_B + alpha^2 beta).
inline DeltaPair constructive_delta(double alpha, double beta, double c_a, double c_b) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(c_a > 0.0) || !(c_b > 0.0))
    throw DomainError("constructive_delta: all inputs must be positive");
  const double a2 = alpha * alpha;
  const double a4 = a2 * a2;
  const double ca2 = c_a * c_a;
  DeltaPair out;
  out.epsilon = a4 * beta / (a4 * beta + ca2 * ca2 * c_b) * (beta / 4.0);
  out.delta = a2 * beta * out.epsilon / (2.0 * ca2 * c_b + a2 * beta);
  return out;
}

/// log-spaced grid of n points on [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out;
  if (n == 1) return {lo};
  for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return out;
}

inline std::vector<double> default_alpha_grid() { return log_grid(1e-2, 1e2, 32); }

struct CriterionResult {
  bool found = false;
  double alpha = 0.0;
  double beta = 0.0;
  double c_a = 0.0;
  double c_b = 0.0;
  DeltaPair constants;
  std::vector<double> beta_per_direction;  // at the chosen alpha
};

/// Picks the alpha that maximizes the certified delta. beta(alpha) is the
/// sampled minimum over directions; failure (found = false) when no alpha
/// gives beta > 0.
inline CriterionResult strict_criterion_search(const SystemSpec& spec, const std::vector<double>& alphas,
                                               const std::vector<Vec>& directions) {
  if (alphas.empty() || directions.empty()) throw DomainError("strict_criterion_search: empty grid");
  for (double a : alphas)
    if (!(a > 0.0)) throw DomainError("strict_criterion_search: alphas must be positive");
  CriterionResult res;
  for (const Vec& xi : directions) {
    res.c_a = std::max(res.c_a, g_operator_norm(spec, symbol_advection(spec, xi)));
    res.c_b = std::max(res.c_b, g_operator_norm(spec, symbol_diffusion(spec, xi)));
  }
  std::vector<std::vector<double>> betas(alphas.size(), std::vector<double>(directions.size()));
  if (res.c_b == 0.0) return res;
  parallel_for(alphas.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < directions.size(); ++j) betas[i][j] = criterion_beta(spec, directions[j], alphas[i]);
  });
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double beta = *std::min_element(betas[i].begin(), betas[i].end());
    if (!(beta > 0.0)) continue;
    const DeltaPair dp = constructive_delta(alphas[i], beta, std::max(res.c_a, 1e-300), res.c_b);
    if (!res.found || dp.delta > res.constants.delta) {
      res.found = true;
      res.alpha = alphas[i];
      res.beta = beta;
      res.constants = dp;
      res.beta_per_direction = betas[i];
    }
  }
  return res;
}

/// min over nonzero modes of lambda_min(-G Dbar(xi), |xi|^2 G).
inline double verify_delta(const SystemSpec& spec, const AveragedDiffusion& avg) {
  const Mat& g = spec.entropy_hessian();
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < avg.blocks.size(); ++i) {
    const Mode& m = avg.lattice.mode(i);
    if (is_zero(m)) continue;
    const double k2 = static_cast<double>(norm2(m));
    const Mat lhs = sym(Mat(-g * avg.blocks[i]));
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(lhs, Mat(k2 * g), Eigen::EigenvaluesOnly);
    worst = std::min(worst, es.eigenvalues().minCoeff());
  }
  return worst;
}

struct DissipativityReport {
  bool kawashima_ok = false;
  std::vector<KawashimaWitness> witnesses;
  bool criterion_found = false;
  double alpha = 0.0, beta = 0.0;
  double c_a = 0.0, c_b = 0.0;
  double epsilon = 0.0, delta = 0.0;
  double delta_empirical = 0.0;
  int directions_sampled = 0;
  int lattice_directions = 0;
  int alpha_points = 0;
  std::vector<Vec> directions;
  std::vector<double> beta_per_direction;

  /// Constructive delta is a lower bound for the measured one.
  bool delta_consistent() const { return !criterion_found || delta_empirical >= delta - 1e-9; }
};

inline DissipativityReport analyze_dissipativity(const SystemSpec& spec, const AveragedDiffusion& avg,
                                                 const std::vector<double>& alphas = default_alpha_grid(),
                                                 int n_fibonacci = kFibonacciDirections) {
  DissipativityReport rep;
  rep.directions = dissipativity_directions(avg.lattice, n_fibonacci);
  rep.directions_sampled = static_cast<int>(rep.directions.size());
  rep.lattice_directions = static_cast<int>(avg.lattice.size()) - 1;
  rep.alpha_points = static_cast<int>(alphas.size());
  const KawashimaResult kc = kawashima_check(spec, rep.directions);
  rep.kawashima_ok = kc.ok;
  rep.witnesses = kc.witnesses;
  const CriterionResult cr = strict_criterion_search(spec, alphas, rep.directions);
  rep.criterion_found = cr.found;
  rep.c_a = cr.c_a;
  rep.c_b = cr.c_b;
  if (cr.found) {
    rep.alpha = cr.alpha;
    rep.beta = cr.beta;
    rep.epsilon = cr.constants.epsilon;
    rep.delta = cr.constants.delta;
    rep.beta_per_direction = cr.beta_per_direction;
  }
  rep.delta_empirical = avg.lattice.size() > 1 ? verify_delta(spec, avg) : 0.0;
  return rep;
}

inline void write_dissipativity_report(std::ostream& os, const DissipativityReport& r) {
  os.precision(17);
  os << "kawashima_ok = " << (r.kawashima_ok ? "true" : "false") << '\n';
  os << "kawashima_witnesses = " << r.witnesses.size() << '\n';
  os << "criterion_found = " << (r.criterion_found ? "true" : "false") << '\n';
  os << "alpha = " << r.alpha << '\n';
  os << "beta = " << r.beta << '\n';
  os << "C_A = " << r.c_a << '\n';
  os << "C_B = " << r.c_b << '\n';
  os << "epsilon = " << r.epsilon << '\n';
  os << "delta = " << r.delta << '\n';
  os << "delta_empirical = " << r.delta_empirical << '\n';
  os << "delta_consistent = " << (r.delta_consistent() ? "true" : "false") << '\n';
  os << "alpha_grid_points = " << r.alpha_points << '\n';
  os << "directions_sampled = " << r.directions_sampled << '\n';
  os << "lattice_directions = " << r.lattice_directions << '\n';
  os << "sampling_note = sphere condition checked on sampled directions only\n";
  for (std::size_t i = 0; i < r.witnesses.size(); ++i) {
    const auto& w = r.witnesses[i];
    os << "witness." << i << " = direction";
    for (Eigen::Index a = 0; a < w.direction.size(); ++a) os << ' ' << w.direction(a);
    os << " omega " << w.frequency << " vector";
    for (Eigen::Index a = 0; a < w.eigenvector.size(); ++a) os << ' ' << w.eigenvector(a);
    os << '\n';
  }
}

inline void write_beta_csv(std::ostream& os, const DissipativityReport& r) {
  os.precision(17);
  const int d = r.directions.empty() ? 0 : static_cast<int>(r.directions[0].size());
  for (int a = 0; a < d; ++a) os << "xi" << a << ',';
  os << "beta\n";
  for (std::size_t i = 0; i < r.beta_per_direction.size(); ++i) {
    for (int a = 0; a < d; ++a) os << r.directions[i](a) << ',';
    os << r.beta_per_direction[i] << '\n';
  }
}

}  // namespace wndkit
