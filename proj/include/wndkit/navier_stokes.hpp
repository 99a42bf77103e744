#pragma once

// Compressible Navier-Stokes instantiation in primitive perturbation
// variables W = (rho, u_1..u_d, theta), and the weakly compressible
// (incompressible + acoustic) split of its averaged dynamics.

#include "wndkit/averaging.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace wndkit::ns {

/// Pressure and specific energy with partials up to second order.
struct ThermoState {
  double p = 0, p_r = 0, p_t = 0, p_rr = 0, p_rt = 0, p_tt = 0;
  double e = 0, e_r = 0, e_t = 0, e_rr = 0, e_rt = 0, e_tt = 0;
};

struct EquationOfState {
  std::string name;
  std::function<ThermoState(double rho, double theta)> eval;

  ThermoState operator()(double rho, double theta) const { return eval(rho, theta); }
};

/// p = rho theta, e = (D/2) theta.
inline EquationOfState ideal_gas(double d_micro) {
  return {"ideal-gas", [d_micro](double rho, double theta) {
            ThermoState s;
            s.p = rho * theta;
            s.p_r = theta;
            s.p_t = rho;
            s.p_rt = 1.0;
            s.e = 0.5 * d_micro * theta;
            s.e_t = 0.5 * d_micro;
            return s;
          }};
}

struct TransportCoefficients {
  double mu = 0.0;      // shear viscosity
  double lambda = 0.0;  // bulk viscosity
  double kappa = 0.0;   // thermal conductivity
  double d_micro = 3.0;
};

struct ReferenceState {
  double rho = 1.0;
  double theta = 1.0;
};

inline ThermoState checked_thermo(const EquationOfState& eos, ReferenceState ref) {
  if (!(ref.rho > 0.0) || !(ref.theta > 0.0)) throw DomainError("eos: reference density and temperature must be positive");
  const ThermoState s = eos(ref.rho, ref.theta);
  if (!(s.e_t > 0.0)) throw DomainError("eos: specific heat d(e)/d(theta) must be positive");
  if (!(s.p_r > 0.0)) throw DomainError("eos: d(p)/d(rho) must be positive");
  return s;
}

inline double sound_speed_squared(const EquationOfState& eos, ReferenceState ref) {
  const ThermoState s = eos(ref.rho, ref.theta);
  if (!(s.e_t > 0.0)) throw DomainError("sound_speed: specific heat must be positive");
  const double c2 = s.p_r + ref.theta * s.p_t * s.p_t / (ref.rho * ref.rho * s.e_t);
  if (!(c2 > 0.0)) throw DomainError("sound_speed: c^2 is not positive");
  return c2;
}

inline double sound_speed(const EquationOfState& eos, ReferenceState ref) {
  return std::sqrt(sound_speed_squared(eos, ref));
}

/// Effective diffusivity of the acoustic modes.
inline double acoustic_diffusivity(const EquationOfState& eos, const TransportCoefficients& tr,
                                   ReferenceState ref) {
  const ThermoState s = eos(ref.rho, ref.theta);
  const double c2 = sound_speed_squared(eos, ref);
  const double cv = s.e_t;
  const double viscous = (2.0 * ((tr.d_micro - 1.0) / tr.d_micro) * tr.mu + tr.lambda) / (2.0 * ref.rho);
  const double thermal = tr.kappa / (2.0 * ref.rho * cv) *
                         (ref.theta * s.p_t * s.p_t / (ref.rho * ref.rho * cv * c2));
  return viscous + thermal;
}

/// C_P = C_V + theta p_theta^2 / (rho^2 p_rho).
inline double heat_capacity_pressure(const EquationOfState& eos, ReferenceState ref) {
  const ThermoState s = eos(ref.rho, ref.theta);
  return s.e_t + ref.theta * s.p_t * s.p_t / (ref.rho * ref.rho * s.p_r);
}

/// Jacobian of the conserved densities (rho, rho u, E) with respect to the
/// primitive variables at the reference state.
inline Mat conserved_jacobian(const EquationOfState& eos, ReferenceState ref, int d) {
  const ThermoState s = eos(ref.rho, ref.theta);
  const int n = d + 2;
  const int t = d + 1;
  Mat r = Mat::Zero(n, n);
  r(0, 0) = 1.0;
  for (int i = 0; i < d; ++i) r(1 + i, 1 + i) = ref.rho;
  r(t, 0) = s.e + ref.rho * s.e_r;
  r(t, t) = ref.rho * s.e_t;
  return r;
}

/// Symbol data of the compressible Navier-Stokes system linearized about
/// (rho_o, 0, theta_o). The quadratic kernel is 1/2 R^{-1} F_UU(R W, R W),
/// computed from second-order expansions of the flux and of the conserved
/// densities in primitive variables.
inline SystemSpec build_cns_spec(const EquationOfState& eos, const TransportCoefficients& tr,
                                 ReferenceState ref, int d) {
  if (d < 1 || d > kMaxDim) throw DimensionError("cns: dimension must be in [1, 3]");
  if (tr.d_micro < std::max(2, d)) throw DomainError("cns: microscopic dimension must be >= max(2, d)");
  if (tr.mu < 0.0 || tr.lambda < 0.0 || tr.kappa < 0.0) throw DomainError("cns: transport coefficients must be nonnegative");
  const ThermoState s = checked_thermo(eos, ref);
  const double rho = ref.rho, theta = ref.theta;
  const int n = d + 2;
  const int t = d + 1;
  auto vel = [](int i) { return 1 + i; };

  const Mat r = conserved_jacobian(eos, ref, d);
  const Mat rinv = r.inverse();

  // rho e and its partials
  const double re_r = s.e + rho * s.e_r;
  const double re_t = rho * s.e_t;
  const double re_rr = 2.0 * s.e_r + rho * s.e_rr;
  const double re_rt = s.e_t + rho * s.e_rt;
  const double re_tt = rho * s.e_tt;

  // Half the second derivative of the conserved densities, per component.
  std::vector<Mat> u2(n, Mat::Zero(n, n));
  for (int i = 0; i < d; ++i) {
    u2[vel(i)](0, vel(i)) = u2[vel(i)](vel(i), 0) = 0.5;
    u2[t](vel(i), vel(i)) = 0.5 * rho;
  }
  u2[t](0, 0) = 0.5 * re_rr;
  u2[t](0, t) = u2[t](t, 0) = 0.5 * re_rt;
  u2[t](t, t) = 0.5 * re_tt;

  std::vector<Mat> adv;
  std::vector<Mat> quad;
  for (int a = 0; a < d; ++a) {
    // First derivative of the flux in direction a.
    Mat f1 = Mat::Zero(n, n);
    f1(0, vel(a)) = rho;
    f1(vel(a), 0) = s.p_r;
    f1(vel(a), t) = s.p_t;
    f1(t, vel(a)) = rho * s.e + s.p;

    // Half the second derivative of the flux in direction a.
    std::vector<Mat> f2(n, Mat::Zero(n, n));
    f2[0](0, vel(a)) = f2[0](vel(a), 0) = 0.5;
    for (int i = 0; i < d; ++i) {
      f2[vel(i)](vel(a), vel(i)) += 0.5 * rho;
      f2[vel(i)](vel(i), vel(a)) += 0.5 * rho;
    }
    f2[vel(a)](0, 0) += 0.5 * s.p_rr;
    f2[vel(a)](0, t) += 0.5 * s.p_rt;
    f2[vel(a)](t, 0) += 0.5 * s.p_rt;
    f2[vel(a)](t, t) += 0.5 * s.p_tt;
    f2[t](0, vel(a)) = f2[t](vel(a), 0) = 0.5 * (re_r + s.p_r);
    f2[t](t, vel(a)) = f2[t](vel(a), t) = 0.5 * (re_t + s.p_t);

    const Mat fu = f1 * rinv;  // F_U(U_o)
    adv.push_back(rinv * f1);
    // 1/2 F_UU(RW, RW) = f2(W, W) - F_U u2(W, W)
    std::vector<Mat> conserved(n);
    for (int p = 0; p < n; ++p) {
      conserved[p] = f2[p];
      for (int q = 0; q < n; ++q)
        if (fu(p, q) != 0.0) conserved[p] -= fu(p, q) * u2[q];
    }
    for (int out = 0; out < n; ++out) {
      Mat qo = Mat::Zero(n, n);
      for (int p = 0; p < n; ++p)
        if (rinv(out, p) != 0.0) qo += rinv(out, p) * conserved[p];
      quad.push_back(sym(qo));
    }
  }

  // Linearized viscous and heat-flux terms, written on primitive gradients
  // in conserved form, then mapped with R^{-1}.
  const double mixed = tr.mu * (1.0 - 2.0 / tr.d_micro) + tr.lambda;
  std::vector<Mat> dif;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      Mat m = Mat::Zero(n, n);
      for (int i = 0; i < d; ++i) {
        if (a == b) m(vel(i), vel(i)) += tr.mu;
        for (int j = 0; j < d; ++j) {
          const double w = 0.5 * ((i == a && j == b ? 1.0 : 0.0) + (i == b && j == a ? 1.0 : 0.0));
          m(vel(i), vel(j)) += mixed * w;
        }
      }
      if (a == b) m(t, t) = tr.kappa;
      dif.push_back(rinv * m);
    }

  // R^T H_UU R for H = -rho sigma. The off-diagonal (rho, theta) entry
  // cancels by the Maxwell relation.
  Mat g = Mat::Zero(n, n);
  g(0, 0) = s.p_r / (rho * theta);
  for (int i = 0; i < d; ++i) g(vel(i), vel(i)) = rho / theta;
  g(t, t) = rho * s.e_t / (theta * theta);

  Vec state(n);
  state(0) = rho;
  for (int i = 0; i < d; ++i) state(vel(i)) = 0.0;
  state(t) = rho * (s.e);  // total energy density at rest
  std::vector<std::string> labels{"rho"};
  for (int i = 0; i < d; ++i) labels.push_back("u" + std::to_string(i + 1));
  labels.push_back("theta");
  return SystemSpec(d, n, state, std::move(adv), std::move(dif), std::move(quad), g, labels);
}

/// Named presets: ideal gas with D = 3 at rho = theta = 1, mu = kappa = 1.
inline SystemSpec cns_preset(int d, const TransportCoefficients& tr = {1.0, 0.0, 1.0, 3.0},
                             ReferenceState ref = {}) {
  return build_cns_spec(ideal_gas(tr.d_micro), tr, ref, d);
}

/// G-orthonormal acoustic eigenvectors H_k^+ and H_k^- at a nonzero mode.
inline std::pair<CVec, CVec> acoustic_basis(const EquationOfState& eos, ReferenceState ref, const Mode& k,
                                            int d) {
  if (is_zero(k)) throw DomainError("acoustic_basis: k must be nonzero");
  const ThermoState s = eos(ref.rho, ref.theta);
  const double c = sound_speed(eos, ref);
  const double scale = std::sqrt(ref.theta / (2.0 * ref.rho));
  const double knorm = std::sqrt(static_cast<double>(norm2(k)));
  CVec plus = CVec::Zero(d + 2), minus = CVec::Zero(d + 2);
  plus(0) = minus(0) = scale * ref.rho / c;
  for (int i = 0; i < d; ++i) {
    plus(1 + i) = scale * k[i] / knorm;
    minus(1 + i) = -scale * k[i] / knorm;
  }
  plus(d + 1) = minus(d + 1) = scale * ref.theta * s.p_t / (ref.rho * s.e_t * c);
  return {plus, minus};
}

/// Frequency branch of a CNS eigenvalue: omega = branch * c |k|.
enum class Branch : int { minus = -1, zero = 0, plus = 1 };

/// Exact test of s1 sqrt(a) + s2 sqrt(b) = s3 sqrt(c) for a = |k|^2,
/// b = |l|^2, c = |k + l|^2, in integer arithmetic.
inline bool ns_resonance_rule(const Mode& k, Branch b1, const Mode& l, Branch b2, Branch b3) {
  const Mode m = add(k, l);
  std::int64_t s1 = static_cast<int>(b1), s2 = static_cast<int>(b2), s3 = static_cast<int>(b3);
  const std::int64_t a = norm2(k), b = norm2(l), c = norm2(m);
  // A zero wavevector only carries the zero frequency.
  if (a == 0) s1 = 0;
  if (b == 0) s2 = 0;
  if (c == 0) s3 = 0;
  // Terms x = s1 sqrt(a), y = s2 sqrt(b), -z = -s3 sqrt(c) must sum to zero.
  struct Term {
    std::int64_t sign, sq;
  };
  std::vector<Term> terms;
  if (s1 != 0) terms.push_back({s1, a});
  if (s2 != 0) terms.push_back({s2, b});
  if (s3 != 0) terms.push_back({-s3, c});
  if (terms.empty()) return true;
  if (terms.size() == 1) return false;
  if (terms.size() == 2) return terms[0].sq == terms[1].sq && terms[0].sign == -terms[1].sign;
  // s1 sqrt(a) + s2 sqrt(b) = s3 sqrt(c) with all three nonzero. Squaring:
  // 2 s1 s2 sqrt(ab) = c - a - b, so (c - a - b)^2 = 4ab with matching sign,
  // and the left side must carry the sign s3.
  const std::int64_t diff = c - a - b;
  if (diff == 0 || diff * diff != 4 * a * b) return false;
  if ((diff > 0 ? 1 : -1) != s1 * s2) return false;
  std::int64_t lhs_sign;
  if (s1 == s2) {
    lhs_sign = s1;
  } else {
    if (a == b) return false;  // lhs vanishes but rhs does not
    lhs_sign = a > b ? s1 : s2;
  }
  return lhs_sign == s3;
}

/// Maps a frequency value at a mode to its branch.
inline Branch branch_of(double omega, double scale) {
  const double tol = 1e-8 * std::max(scale, 1.0);
  if (omega > tol) return Branch::plus;
  if (omega < -tol) return Branch::minus;
  return Branch::zero;
}

/// Resonance rule for table construction on a CNS spectrum.
inline ResonanceRule cns_exact_rule(const Spectrum& spectrum) {
  return [&spectrum](const Mode& k, int j1, const Mode& l, int j2, const Mode& m, int j3) {
    const double scale = spectrum.omega_max();
    return ns_resonance_rule(k, branch_of(spectrum.at(k).frequencies[j1], scale), l,
                             branch_of(spectrum.at(l).frequencies[j2], scale),
                             branch_of(spectrum.at(m).frequencies[j3], scale));
  };
}

/// Incompressible (Null(A)) and acoustic components of a state.
struct WcnsSplit {
  SpectralState incompressible;
  SpectralState acoustic;
};

inline WcnsSplit decompose_wcns(const Spectrum& spectrum, const SpectralState& w) {
  require_same_lattice(spectrum.lattice(), w.lattice, "decompose_wcns");
  WcnsSplit out{SpectralState(w.lattice, w.ncomp(), w.time), SpectralState(w.lattice, w.ncomp(), w.time)};
  const double scale = spectrum.omega_max();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& dec = spectrum.at(i);
    CVec in = CVec::Zero(w.ncomp());
    for (int j = 0; j < dec.count(); ++j)
      if (branch_of(dec.frequencies[j], scale) == Branch::zero) in += dec.projectors[j].cast<Complex>() * w.at(i);
    out.incompressible.coeffs.col(i) = in;
    out.acoustic.coeffs.col(i) = w.at(i) - in;
  }
  return out;
}

/// Largest violation of the incompressible constraints k.u = 0 and
/// p_rho rho + p_theta theta = 0 over nonzero modes, relative to |W|.
inline double incompressible_defect(const EquationOfState& eos, ReferenceState ref, const SpectralState& w) {
  const ThermoState s = eos(ref.rho, ref.theta);
  const int d = w.lattice.dim();
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Mode& k = w.lattice.mode(i);
    if (is_zero(k)) continue;
    const CVec v = w.at(i);
    const double scale = std::max(v.norm(), 1e-300);
    Complex div = 0.0;
    for (int a = 0; a < d; ++a) div += static_cast<double>(k[a]) * v(1 + a);
    div /= std::sqrt(static_cast<double>(norm2(k)));
    const Complex pres = (s.p_r * v(0) + s.p_t * v(d + 1)) / std::hypot(s.p_r, s.p_t);
    worst = std::max({worst, std::abs(div) / scale, std::abs(pres) / scale});
  }
  return worst;
}

/// Largest violation of the acoustic constraints (velocity parallel to k,
/// chi = theta p_theta / (rho^2 C_V) eta) relative to |W|.
inline double acoustic_defect(const EquationOfState& eos, ReferenceState ref, const SpectralState& w) {
  const ThermoState s = eos(ref.rho, ref.theta);
  const int d = w.lattice.dim();
  const double ratio = ref.theta * s.p_t / (ref.rho * ref.rho * s.e_t);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Mode& k = w.lattice.mode(i);
    if (is_zero(k)) continue;
    const CVec v = w.at(i);
    const double scale = std::max(v.norm(), 1e-300);
    const Vec kv = mode_to_vec(k, d) / std::sqrt(static_cast<double>(norm2(k)));
    CVec u = v.segment(1, d);
    Complex along = 0.0;
    for (int a = 0; a < d; ++a) along += kv(a) * u(a);
    CVec perp = u;
    for (int a = 0; a < d; ++a) perp(a) -= along * kv(a);
    worst = std::max({worst, perp.norm() / scale, std::abs(v(d + 1) - ratio * v(0)) / scale});
  }
  return worst;
}

/// Counts of resonance triples by branch signature, e.g. "0 0 0" or "+ - 0".
inline std::map<std::string, std::size_t> resonance_statistics(const Spectrum& spectrum, const ResonanceTable& table) {
  std::map<std::string, std::size_t> out;
  const double scale = spectrum.omega_max();
  auto sym_of = [&](std::uint32_t mode, int j) {
    switch (branch_of(spectrum.at(mode).frequencies[j], scale)) {
      case Branch::plus: return '+';
      case Branch::minus: return '-';
      default: return '0';
    }
  };
  for (const auto& t : table.triples) {
    std::string key{sym_of(t.k, t.j1), ' ', sym_of(t.l, t.j2), ' ', sym_of(t.m, t.j3)};
    ++out[key];
  }
  return out;
}

/// Empirical interaction constants read off the averaged operator.
///
/// c4: acoustic-acoustic-acoustic collinear interaction, normalized as the
///     H_m^+ coefficient of Qbar(H_k^+, H_l^+) + Qbar(H_l^+, H_k^+) divided by i|m|.
/// c1, c2, c3: least-squares fit of the H_m^+ coefficient of the
///     acoustic-incompressible interaction (|k| = |m|) against the template
///     m.[c1 ((u.m) k + (k.m) u)/(|k||m|) + theta/|m| (c2 k + c3 m)]/|m|,
///     multiplied by i|m|. The fit residual is reported with the constants.
struct EmpiricalConstants {
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0;
  double fit_residual = 0;
  int samples = 0;
};

inline EmpiricalConstants extract_empirical_constants(const SystemSpec& spec, const EquationOfState& eos,
                                                      ReferenceState ref, const Spectrum& spectrum,
                                                      const ResonanceTable& table) {
  const FrequencyLattice& lat = spectrum.lattice();
  const int d = lat.dim();
  const QbarOperator qbar(spec, spectrum, table);
  const Mat g = spec.entropy_hessian();
  EmpiricalConstants out;

  auto unit_state = [&](const Mode& k, const CVec& v) {
    SpectralState w(lat, spec.ncomp());
    const long i = lat.index(k);
    if (i < 0) throw DimensionError("empirical constants: lattice too small");
    w.coeffs.col(i) = v;
    return w;
  };
  auto coefficient = [&](const SpectralState& q, const Mode& m) {
    const CVec h = acoustic_basis(eos, ref, m, d).first;
    return h.dot(g.cast<Complex>() * q.at(static_cast<std::size_t>(lat.index(m))));
  };

  if (lat.radius() >= 3) {
    Mode k{}, l{};
    k[0] = 1;
    l[0] = 2;
    const Mode m = add(k, l);
    const SpectralState hk = unit_state(k, acoustic_basis(eos, ref, k, d).first);
    const SpectralState hl = unit_state(l, acoustic_basis(eos, ref, l, d).first);
    const Complex c = coefficient(qbar.apply(hk, hl) + qbar.apply(hl, hk), m);
    out.c4 = (c / (kI * std::sqrt(static_cast<double>(norm2(m))))).real();
  }

  if (d >= 2 && lat.radius() >= 2) {
    // Acoustic mode at k, incompressible mode at l, output m = k + l with |k| = |m|.
    const ThermoState s = eos(ref.rho, ref.theta);
    std::vector<std::array<double, 3>> rows;
    std::vector<Complex> rhs;
    for (std::size_t ki = 0; ki < lat.size(); ++ki) {
      const Mode& k = lat.mode(ki);
      if (is_zero(k)) continue;
      for (std::size_t li = 0; li < lat.size(); ++li) {
        const Mode& l = lat.mode(li);
        if (is_zero(l)) continue;
        const Mode m = add(k, l);
        if (!lat.contains(m) || norm2(m) != norm2(k)) continue;
        const Vec kv = mode_to_vec(k, d), mv = mode_to_vec(m, d), lv = mode_to_vec(l, d);
        const double kn = kv.norm(), mn = mv.norm();
        // vortical velocity perpendicular to l (2-D: rotate l), and an entropy mode
        Vec perp = Vec::Zero(d);
        perp(0) = -lv(1);
        perp(1) = lv(0);
        perp /= perp.norm();
        for (int kind = 0; kind < 2; ++kind) {
          CVec wl = CVec::Zero(spec.ncomp());
          Vec uvec = Vec::Zero(d);
          double th = 0.0;
          if (kind == 0) {
            uvec = perp;
            for (int a = 0; a < d; ++a) wl(1 + a) = uvec(a);
          } else {
            th = 1.0;
            wl(d + 1) = th;
            wl(0) = -s.p_t / s.p_r * th;
          }
          const SpectralState hk = unit_state(k, acoustic_basis(eos, ref, k, d).first);
          const SpectralState wi = unit_state(l, wl);
          const Complex c = coefficient(qbar.apply(hk, wi) + qbar.apply(wi, hk), m);
          const Vec t1 = ((uvec.dot(mv)) * kv + (kv.dot(mv)) * uvec) / (kn * mn);
          const Vec t2 = (th / mn) * kv;
          const Vec t3 = (th / mn) * mv;
          rows.push_back({t1.dot(mv) / mn, t2.dot(mv) / mn, t3.dot(mv) / mn});
          rhs.push_back(c / (kI * mn));
        }
      }
    }
    if (!rows.empty()) {
      Mat a(rows.size(), 3);
      Vec b(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (int c = 0; c < 3; ++c) a(r, c) = rows[r][c];
        b(r) = rhs[r].real();
      }
      const Vec x = a.completeOrthogonalDecomposition().solve(b);
      out.c1 = x(0);
      out.c2 = x(1);
      out.c3 = x(2);
      out.fit_residual = (a * x - b).norm() / std::max(b.norm(), 1e-300);
      out.samples = static_cast<int>(rows.size());
    }
  }
  return out;
}

}  // namespace wndkit::ns
