#pragma once

// Galerkin time stepping of dW/dt + A W + Qbar(W, W) = Dbar W with
// integrating-factor Runge-Kutta schemes, plus energy diagnostics.

#include "wndkit/averaging.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wndkit {

/// Everything the time stepper needs for one spec on one lattice.
struct Operators {
  std::shared_ptr<const SystemSpec> spec;
  Spectrum spectrum;
  AveragedDiffusion avg;
  ResonanceTable table;
  std::shared_ptr<const QbarOperator> qbar;
  bool nonlinear = true;  // false drops Qbar from the dynamics

  const FrequencyLattice& lattice() const { return spectrum.lattice(); }
  int ncomp() const { return spec->ncomp(); }
};

inline constexpr double kDefaultResonanceTol = 1e-9;

inline Operators build_operators(const SystemSpec& spec, int lattice_k, double resonance_tol = kDefaultResonanceTol,
                                 const std::function<ResonanceRule(const Spectrum&)>& rule_factory = {},
                                 double cluster_tol = kDefaultClusterTol) {
  Operators ops;
  ops.spec = std::make_shared<const SystemSpec>(spec);
  ops.spectrum = frequency_spectrum(spec, FrequencyLattice(spec.dim(), lattice_k), cluster_tol);
  ops.avg = averaged_diffusion(spec, ops.spectrum);
  ops.table = build_resonance_table(ops.spectrum, resonance_tol,
                                    rule_factory ? rule_factory(ops.spectrum) : ResonanceRule{});
  ops.qbar = std::make_shared<const QbarOperator>(spec, ops.spectrum, ops.table);
  return ops;
}

/// A W = sum_j i omega_j P_j W per mode.
inline SpectralState apply_A(const Spectrum& spectrum, const SpectralState& w) {
  SpectralState out = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& dec = spectrum.at(i);
    CVec acc = CVec::Zero(w.ncomp());
    for (int j = 0; j < dec.count(); ++j)
      acc += (kI * dec.frequencies[j]) * (dec.projectors[j].cast<Complex>() * w.at(i));
    out.coeffs.col(i) = acc;
  }
  return out;
}

/// -A W - Qbar(W, W) + Dbar W.
inline SpectralState rhs(const Operators& ops, const SpectralState& w) {
  require_same_lattice(ops.lattice(), w.lattice, "rhs");
  SpectralState out = apply_Dbar(ops.avg, w) - apply_A(ops.spectrum, w);
  if (ops.nonlinear) out.coeffs -= ops.qbar->apply_real(w).coeffs;
  return out;
}

// ---------------------------------------------------------------------------
// Time stepping

enum class Integrator { if_rk2, if_rk4 };

inline Integrator parse_integrator(const std::string& s) {
  if (s == "if_rk2") return Integrator::if_rk2;
  if (s == "if_rk4") return Integrator::if_rk4;
  throw DomainError("unknown integrator '" + s + "' (expected if_rk2 or if_rk4)");
}

inline std::string to_string(Integrator i) { return i == Integrator::if_rk2 ? "if_rk2" : "if_rk4"; }

inline constexpr double kBlowUpThreshold = 1e12;

/// exp(h Dbar(xi)) from the symmetric eigendecomposition of
/// G^{1/2} Dbar G^{-1/2}.
inline Mat diffusion_propagator(const SystemSpec& spec, const Mat& dbar, double h) {
  const Mat s = sym(Mat(spec.g_sqrt() * dbar * spec.g_inv_sqrt()));
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  const Mat& v = es.eigenvectors();
  const Vec e = (h * es.eigenvalues()).array().exp().matrix();
  return spec.g_inv_sqrt() * v * e.asDiagonal() * v.transpose() * spec.g_sqrt();
}

/// Advances W (full form) or the filtered variable Y (filtered form, whose
/// linear part is Dbar alone). Propagators are built once per step size.
class Stepper {
 public:
  Stepper(const Operators& ops, Integrator integrator, double dt, bool filtered = false)
      : ops_(&ops), integrator_(integrator), dt_(dt), filtered_(filtered) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("stepper: dt must be positive");
    full_ = propagators(dt);
    half_ = propagators(0.5 * dt);
  }

  double dt() const { return dt_; }
  Integrator integrator() const { return integrator_; }
  bool filtered() const { return filtered_; }

  SpectralState step(const SpectralState& w) const {
    require_same_lattice(ops_->lattice(), w.lattice, "step");
    SpectralState out = integrator_ == Integrator::if_rk4 ? rk4(w) : rk2(w);
    out.time = w.time + dt_;
    check_finite(out);
    return out;
  }

 private:
  std::vector<CMat> propagators(double h) const {
    std::vector<CMat> out(ops_->lattice().size());
    parallel_for(out.size(), [&](std::size_t i) {
      const CMat diff = diffusion_propagator(*ops_->spec, ops_->avg.blocks[i], h).cast<Complex>();
      out[i] = filtered_ ? diff : CMat(group_matrix(ops_->spectrum.at(i), h) * diff);
    });
    return out;
  }

  SpectralState nonlinear(const SpectralState& w) const {
    if (!ops_->nonlinear) return SpectralState(w.lattice, w.ncomp(), w.time);
    SpectralState q = ops_->qbar->apply_real(w);
    q.coeffs *= -1.0;
    return q;
  }

  static SpectralState prop(const std::vector<CMat>& e, const SpectralState& w) {
    SpectralState out = w;
    for (std::size_t i = 0; i < w.size(); ++i) out.coeffs.col(i).noalias() = e[i] * w.at(i);
    return out;
  }

  SpectralState rk2(const SpectralState& w) const {
    const double h = dt_;
    const SpectralState k1 = nonlinear(w);
    SpectralState stage = w;
    stage.coeffs += h * k1.coeffs;
    const SpectralState k2 = nonlinear(prop(full_, stage));
    SpectralState out = prop(full_, w);
    out.coeffs += (0.5 * h) * (prop(full_, k1).coeffs + k2.coeffs);
    return out;
  }

  SpectralState rk4(const SpectralState& w) const {
    const double h = dt_;
    const SpectralState ew_half = prop(half_, w);
    const SpectralState k1 = nonlinear(w);
    SpectralState s = w;
    s.coeffs += (0.5 * h) * k1.coeffs;
    const SpectralState k2 = nonlinear(prop(half_, s));
    s = ew_half;
    s.coeffs += (0.5 * h) * k2.coeffs;
    const SpectralState k3 = nonlinear(s);
    s = prop(full_, w);
    const SpectralState ew_full = s;
    s.coeffs += h * prop(half_, k3).coeffs;
    const SpectralState k4 = nonlinear(s);
    SpectralState mid = k2;
    mid.coeffs += k3.coeffs;
    SpectralState out = ew_full;
    out.coeffs += (h / 6.0) * (prop(full_, k1).coeffs + 2.0 * prop(half_, mid).coeffs + k4.coeffs);
    return out;
  }

  void check_finite(const SpectralState& w) const {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto col = w.at(i);
      bool bad = false;
      for (Eigen::Index c = 0; c < col.size(); ++c) {
        const double mag = std::abs(col(c));
        if (!std::isfinite(mag) || mag > kBlowUpThreshold) bad = true;
      }
      if (bad) {
        const Mode& m = w.lattice.mode(i);
        std::string where;
        for (int a = 0; a < w.lattice.dim(); ++a) where += (a ? "," : "") + std::to_string(m[a]);
        throw BlowUpError("blow-up at mode (" + where + ") at t = " + std::to_string(w.time), m, w.time);
      }
    }
  }

  const Operators* ops_;
  Integrator integrator_;
  double dt_;
  bool filtered_;
  std::vector<CMat> full_, half_;
};

// ---------------------------------------------------------------------------
// Diagnostics

struct DiagnosticsSeries {
  std::vector<double> sobolev_orders;
  std::vector<double> times;
  std::vector<double> energy;       // 1/2 |W|_H^2
  std::vector<double> dissipation;  // -(W | Dbar W)_H
  std::vector<std::vector<double>> sobolev;  // one column per order
  std::vector<double> dissipated;   // integral of the dissipation so far
  std::vector<double> budget_residual;  // 1/2|W|^2 + dissipated - 1/2|W_in|^2

  /// max_t |budget_residual(t)| / t over t > 0.
  double budget_rate() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i)
      if (times[i] > 0.0) worst = std::max(worst, std::abs(budget_residual[i]) / times[i]);
    return worst;
  }
  /// Largest increase of the energy between consecutive samples.
  double max_energy_increase() const {
    double worst = 0.0;
    for (std::size_t i = 1; i < energy.size(); ++i) worst = std::max(worst, energy[i] - energy[i - 1]);
    return worst;
  }
};

inline double dissipation_rate(const Operators& ops, const SpectralState& w) {
  return -inner(*ops.spec, w, apply_Dbar(ops.avg, w)).real();
}

struct SimulationConfig {
  double dt = 0.0;  // 0 picks min(1e-3, 0.1 / omega_max)
  double t_end = 1.0;
  Integrator integrator = Integrator::if_rk4;
  int diagnostics_every = 10;
  bool filtered = false;
  bool keep_snapshots = true;
  std::vector<double> sobolev_orders{1.0};
};

struct SimulationResult {
  std::vector<SpectralState> snapshots;
  DiagnosticsSeries diagnostics;
  std::vector<std::string> warnings;
  double dt = 0.0;
  long steps = 0;
};

inline double default_dt(const Operators& ops) {
  const double wmax = ops.spectrum.omega_max();
  return wmax > 0.0 ? std::min(1e-3, 0.1 / wmax) : 1e-3;
}

/// Integrates from w_in over [0, t_end]. The dissipation integral uses
/// Simpson's rule on the step grid, so it is fourth-order accurate and the
/// budget residual reflects the time-stepping error. In the filtered form the
/// stored state is the filtered variable Y; its energy and dissipation equal
/// those of W because exp(-tA) is G-unitary and commutes with Dbar.
inline SimulationResult simulate(const Operators& ops, const SpectralState& w_in, const SimulationConfig& cfg) {
  require_same_lattice(ops.lattice(), w_in.lattice, "simulate");
  if (!(cfg.t_end >= 0.0)) throw DomainError("simulate: t_end must be nonnegative");
  if (cfg.diagnostics_every < 1) throw DomainError("simulate: diagnostics_every must be >= 1");
  SimulationResult res;
  res.dt = cfg.dt > 0.0 ? cfg.dt : default_dt(ops);
  if (ops.spectrum.omega_max() * res.dt > 0.5)
    res.warnings.push_back("omega_max * dt = " + std::to_string(ops.spectrum.omega_max() * res.dt) +
                           " exceeds 0.5; the fastest frequency is under-resolved");
  const long steps = static_cast<long>(std::llround(cfg.t_end / res.dt));
  if (steps > 0 && std::abs(steps * res.dt - cfg.t_end) > 1e-9 * std::max(1.0, cfg.t_end))
    res.warnings.push_back("t_end is not a multiple of dt; stopping at " + std::to_string(steps * res.dt));
  res.steps = steps;
  const Stepper stepper(ops, cfg.integrator, res.dt, cfg.filtered);

  auto& diag = res.diagnostics;
  diag.sobolev_orders = cfg.sobolev_orders;
  diag.sobolev.resize(cfg.sobolev_orders.size());
  SpectralState w = w_in;
  w.time = 0.0;
  const double e0 = 0.5 * std::pow(norm_h(*ops.spec, w), 2);
  std::vector<double> rate{dissipation_rate(ops, w)};
  double integral_even = 0.0;  // Simpson sum up to the last even step
  double rate_half = 0.0;      // at dt/2, for the first interval
  if (steps >= 1 && (cfg.diagnostics_every == 1 || steps == 1))
    rate_half = dissipation_rate(ops, Stepper(ops, cfg.integrator, 0.5 * res.dt, cfg.filtered).step(w));

  auto record = [&](long n) {
    // Odd step counts close the last interval with a three-point rule.
    double integral = integral_even;
    if (n == 1)
      integral = res.dt * (rate[0] + 4.0 * rate_half + rate[1]) / 6.0;
    else if (n % 2 == 1)
      integral += res.dt * (-rate[n - 2] + 8.0 * rate[n - 1] + 5.0 * rate[n]) / 12.0;
    const double e = 0.5 * std::pow(norm_h(*ops.spec, w), 2);
    diag.times.push_back(w.time);
    diag.energy.push_back(e);
    diag.dissipation.push_back(rate[n]);
    for (std::size_t s = 0; s < cfg.sobolev_orders.size(); ++s)
      diag.sobolev[s].push_back(sobolev_norm(*ops.spec, w, cfg.sobolev_orders[s]));
    diag.dissipated.push_back(integral);
    diag.budget_residual.push_back(e + integral - e0);
    if (cfg.keep_snapshots) res.snapshots.push_back(w);
  };

  record(0);
  for (long n = 1; n <= steps; ++n) {
    w = stepper.step(w);
    w.time = n * res.dt;
    rate.push_back(dissipation_rate(ops, w));
    if (n % 2 == 0) integral_even += res.dt * (rate[n - 2] + 4.0 * rate[n - 1] + rate[n]) / 3.0;
    if (n % cfg.diagnostics_every == 0 || n == steps) record(n);
  }
  return res;
}

inline void write_diagnostics_csv(std::ostream& os, const DiagnosticsSeries& d) {
  os.precision(17);
  os << "time,energy,dissipation";
  for (double s : d.sobolev_orders) os << ",sobolev_" << s;
  os << ",dissipated,budget_residual\n";
  for (std::size_t i = 0; i < d.times.size(); ++i) {
    os << d.times[i] << ',' << d.energy[i] << ',' << d.dissipation[i];
    for (const auto& col : d.sobolev) os << ',' << col[i];
    os << ',' << d.dissipated[i] << ',' << d.budget_residual[i] << '\n';
  }
}

/// Two-column (time, energy) data for gnuplot.
inline void write_energy_dat(std::ostream& os, const DiagnosticsSeries& d) {
  os.precision(17);
  os << "# time energy\n";
  for (std::size_t i = 0; i < d.times.size(); ++i) os << d.times[i] << ' ' << d.energy[i] << '\n';
}

/// CSV: snapshot time, mode components, component index, Re, Im.
inline void write_trajectory_csv(std::ostream& os, const std::vector<SpectralState>& snaps) {
  os.precision(17);
  if (snaps.empty()) return;
  const int d = snaps[0].lattice.dim();
  os << "time";
  for (int a = 0; a < d; ++a) os << ",xi" << a;
  os << ",component,re,im\n";
  for (const auto& s : snaps)
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Mode& m = s.lattice.mode(i);
      for (int c = 0; c < s.ncomp(); ++c) {
        os << s.time;
        for (int a = 0; a < d; ++a) os << ',' << m[a];
        const Complex v = s.coeffs(c, static_cast<Eigen::Index>(i));
        os << ',' << c << ',' << v.real() << ',' << v.imag() << '\n';
      }
    }
}

// ---------------------------------------------------------------------------
// Cross-checks

/// sup over snapshots of |W(t) - exp(-tA) Y(t)|_H / |W(t)|_H, where W
/// follows the full system and Y the filtered one from the same data.
inline double filtered_equivalence_check(const Operators& ops, const SpectralState& w_in, double t_end, double dt,
                                         Integrator integrator = Integrator::if_rk4, int every = 10) {
  SimulationConfig cfg;
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.integrator = integrator;
  cfg.diagnostics_every = every;
  cfg.sobolev_orders.clear();
  const SimulationResult full = simulate(ops, w_in, cfg);
  cfg.filtered = true;
  const SimulationResult filt = simulate(ops, w_in, cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < full.snapshots.size(); ++i) {
    const SpectralState& w = full.snapshots[i];
    const SpectralState y = evolve_state(ops.spectrum, filt.snapshots[i], w.time);
    const double scale = norm_h(*ops.spec, w);
    const double diff = norm_h(*ops.spec, w - y);
    worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
  }
  return worst;
}

struct WeakStrongReport {
  std::vector<double> times;
  std::vector<double> difference;       // |U2(t) - U1(t)|_H
  std::vector<double> gradient_integral;  // int_0^t |grad U1|_{H^s}
  std::vector<double> envelope;         // exp(C int) |U2_in - U1_in|_H
  double fitted_constant = 0.0;
  double max_envelope_excess = 0.0;  // max over snapshots of difference / envelope - 1
  bool bound_holds = false;
  double energy_budget_rate = 0.0;  // of the smooth run
  double max_difference = 0.0;
};

/// Runs both trajectories, fits C as the smallest constant that makes the
/// Gronwall envelope hold on [0, t_end/2], and then checks every snapshot.
inline WeakStrongReport weak_strong_experiment(const Operators& ops, const SpectralState& u1_in,
                                               const SpectralState& u2_in, double t_end, double dt, double s,
                                               int every = 10, Integrator integrator = Integrator::if_rk4) {
  const int d = ops.lattice().dim();
  if (!(s > std::max(0.5 * d, 1.0))) throw DomainError("weak_strong: need s > max(d/2, 1)");
  SimulationConfig cfg;
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.integrator = integrator;
  cfg.diagnostics_every = 1;
  cfg.sobolev_orders.clear();
  const SimulationResult r1 = simulate(ops, u1_in, cfg);
  const SimulationResult r2 = simulate(ops, u2_in, cfg);
  WeakStrongReport rep;
  rep.energy_budget_rate = r1.diagnostics.budget_rate();

  // Trapezoid over every step for the gradient integral.
  std::vector<double> grad(r1.snapshots.size());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = gradient_sobolev_norm(*ops.spec, r1.snapshots[i], s);
  const double diff0 = norm_h(*ops.spec, u2_in - u1_in);
  double integral = 0.0;
  std::vector<double> all_int(grad.size()), all_diff(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (i > 0) integral += 0.5 * (r1.snapshots[i].time - r1.snapshots[i - 1].time) * (grad[i] + grad[i - 1]);
    all_int[i] = integral;
    all_diff[i] = norm_h(*ops.spec, r2.snapshots[i] - r1.snapshots[i]);
    rep.max_difference = std::max(rep.max_difference, all_diff[i]);
  }
  double c = 0.0;
  if (diff0 > 0.0)
    for (std::size_t i = 1; i < grad.size(); ++i)
      if (r1.snapshots[i].time <= 0.5 * t_end + 1e-12 && all_int[i] > 0.0 && all_diff[i] > 0.0)
        c = std::max(c, std::log(all_diff[i] / diff0) / all_int[i]);
  rep.fitted_constant = c;
  rep.bound_holds = true;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (i % static_cast<std::size_t>(every) != 0 && i + 1 != grad.size()) continue;
    const double env = std::exp(c * all_int[i]) * diff0;
    rep.times.push_back(r1.snapshots[i].time);
    rep.difference.push_back(all_diff[i]);
    rep.gradient_integral.push_back(all_int[i]);
    rep.envelope.push_back(env);
    const double excess = env > 0.0 ? all_diff[i] / env - 1.0 : (all_diff[i] > 0.0 ? 1.0 : 0.0);
    rep.max_envelope_excess = std::max(rep.max_envelope_excess, excess);
    if (excess > 1e-9) rep.bound_holds = false;
  }
  return rep;
}

}  // namespace wndkit
