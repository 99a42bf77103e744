#include "catch_amalgamated.hpp"

#include "support/conserved_gas.hpp"
#include "support/helpers.hpp"
#include "support/incompressible_reference.hpp"

using namespace wndkit;
using namespace wndkit::ns;
using wndkit::testing::rel_diff;
using wndkit::testing::rel_diff_states;

namespace {

const EquationOfState kGas = ideal_gas(3.0);
const TransportCoefficients kTransport{1.0, 0.0, 1.0, 3.0};

EquationOfState barotropic() {
  return {"barotropic", [](double rho, double) {
            ThermoState s;
            s.p = rho * rho;
            s.p_r = 2.0 * rho;
            s.p_rr = 2.0;
            s.e_t = 1.0;
            return s;
          }};
}

}  // namespace

TEST_CASE("sound speed", "[navier_stokes]") {
  REQUIRE(sound_speed_squared(kGas, {}) == Catch::Approx(5.0 / 3.0).epsilon(1e-15));
  SECTION("pressure independent of temperature") {
    REQUIRE(sound_speed_squared(barotropic(), {1.5, 1.0}) == Catch::Approx(3.0).epsilon(1e-15));
  }
  SECTION("quadrupling the temperature doubles c") {
    REQUIRE(sound_speed(kGas, {1.0, 4.0}) == Catch::Approx(2.0 * sound_speed(kGas, {})).epsilon(1e-15));
  }
  SECTION("invalid states") {
    REQUIRE_THROWS_AS(checked_thermo(kGas, {-1.0, 1.0}), DomainError);
    REQUIRE_THROWS_AS(build_cns_spec(kGas, kTransport, {1.0, 0.0}, 2), DomainError);
  }
}

TEST_CASE("acoustic diffusivity", "[navier_stokes]") {
  REQUIRE(acoustic_diffusivity(kGas, kTransport, {}) == Catch::Approx(0.8).epsilon(1e-15));
  REQUIRE(acoustic_diffusivity(kGas, {0.0, 0.0, 0.0, 3.0}, {}) == 0.0);
  REQUIRE(acoustic_diffusivity(kGas, {1.0, 0.5, 0.0, 3.0}, {}) ==
          Catch::Approx((2.0 * (2.0 / 3.0) + 0.5) / 2.0).epsilon(1e-15));
}

TEST_CASE("ideal-gas spec", "[navier_stokes]") {
  SECTION("entropy Hessian is positive definite") {
    const SystemSpec s = cns_preset(2);
    REQUIRE(Eigen::SelfAdjointEigenSolver<Mat>(s.entropy_hessian()).eigenvalues().minCoeff() > 0.0);
    REQUIRE(s.ncomp() == 4);
  }
  SECTION("Euler limit has no diffusion and still validates") {
    const SystemSpec s = cns_preset(2, {0.0, 0.0, 0.0, 3.0});
    for (const Mat& b : s.diffusion()) REQUIRE(b.isZero(0.0));
    REQUIRE(validate_entropy_structure(s, 32).passed);
  }
  SECTION("three dimensions validates") {
    REQUIRE(validate_entropy_structure(cns_preset(3), 32).passed);
  }
  SECTION("microscopic dimension must cover the spatial one") {
    REQUIRE_THROWS_AS(cns_preset(3, {1.0, 0.0, 1.0, 2.0}), DomainError);
    REQUIRE_THROWS_AS(cns_preset(2, {-1.0, 0.0, 1.0, 3.0}), DomainError);
  }
  SECTION("entropy Hessian matches the Hessian of -rho sigma") {
    // H_UU from automatic differentiation, conjugated to primitive variables.
    const testing::ConservedIdealGas gas;
    const Vec u0 = gas.state({});
    const Mat huu =
        testing::ConservedIdealGas::derivatives(u0, [&](const std::vector<testing::HyperDual>& u) {
          return gas.entropy(u);
        }).second;
    const Mat r = conserved_jacobian(kGas, {}, 2);
    const Mat prim = r.transpose() * huu * r;
    REQUIRE(rel_diff(prim, cns_preset(2).entropy_hessian()) <= 1e-12);
  }
}

TEST_CASE("acoustic basis", "[navier_stokes]") {
  const SystemSpec s = cns_preset(2);
  const Mat& g = s.entropy_hessian();
  const double c = sound_speed(kGas, {});
  for (const Mode& k : {Mode{1, 0, 0}, Mode{2, -3, 0}, Mode{0, 5, 0}}) {
    const auto [plus, minus] = acoustic_basis(kGas, {}, k, 2);
    const Mat a = symbol_advection(s, mode_to_vec(k, 2));
    const double kn = std::sqrt(static_cast<double>(norm2(k)));
    REQUIRE((a.cast<Complex>() * plus - c * kn * plus).norm() <= 1e-10);
    REQUIRE((a.cast<Complex>() * minus + c * kn * minus).norm() <= 1e-10);
    REQUIRE(std::abs(plus.dot(g.cast<Complex>() * plus) - 1.0) <= 1e-10);
    REQUIRE(std::abs(minus.dot(g.cast<Complex>() * minus) - 1.0) <= 1e-10);
    REQUIRE(std::abs(plus.dot(g.cast<Complex>() * minus)) <= 1e-10);
    REQUIRE(plus.segment(1, 2) == -minus.segment(1, 2));
  }
  REQUIRE_THROWS_AS(acoustic_basis(kGas, {}, Mode{}, 2), DomainError);
}

TEST_CASE("exact resonance rule", "[navier_stokes]") {
  using B = Branch;
  SECTION("closed-form cases") {
    REQUIRE(ns_resonance_rule({3, 0, 0}, B::plus, {4, 0, 0}, B::plus, B::plus));
    REQUIRE_FALSE(ns_resonance_rule({1, 0, 0}, B::plus, {0, 1, 0}, B::plus, B::plus));
    REQUIRE(ns_resonance_rule({1, 2, 0}, B::zero, {3, -1, 0}, B::zero, B::zero));
    // |k| = |m| with an incompressible partner.
    REQUIRE(ns_resonance_rule({1, 0, 0}, B::plus, {-1, 1, 0}, B::zero, B::plus));
    REQUIRE_FALSE(ns_resonance_rule({1, 0, 0}, B::plus, {-1, 1, 0}, B::zero, B::minus));
    // Anti-collinear: +|k| - |l| = -|m| when |l| > |k|.
    REQUIRE(ns_resonance_rule({1, 0, 0}, B::plus, {-3, 0, 0}, B::minus, B::minus));
    REQUIRE_FALSE(ns_resonance_rule({1, 0, 0}, B::plus, {-3, 0, 0}, B::minus, B::plus));
    REQUIRE(ns_resonance_rule({2, 0, 0}, B::plus, {-2, 0, 0}, B::minus, B::zero));
    REQUIRE_FALSE(ns_resonance_rule({2, 0, 0}, B::plus, {-2, 0, 0}, B::plus, B::zero));
  }
  SECTION("agrees with the floating-point rule on the ideal-gas spectrum") {
    const Spectrum sp = frequency_spectrum(cns_preset(2), FrequencyLattice(2, 5));
    const ResonanceTable exact = build_resonance_table(sp, 1e-9, cns_exact_rule(sp));
    const ResonanceTable fl = build_resonance_table(sp, 1e-9);
    REQUIRE(exact.triples.size() == fl.triples.size());
    for (std::size_t i = 0; i < exact.triples.size(); ++i) {
      const auto& a = exact.triples[i];
      const auto& b = fl.triples[i];
      REQUIRE(std::tie(a.k, a.l, a.j1, a.j2, a.j3) == std::tie(b.k, b.l, b.j1, b.j2, b.j3));
    }
  }
  SECTION("rejects every near miss of a loose floating-point rule") {
    const Spectrum sp = frequency_spectrum(cns_preset(2), FrequencyLattice(2, 6));
    const ResonanceTable loose = build_resonance_table(sp, 1e-3);
    const ResonanceRule rule = cns_exact_rule(sp);
    std::size_t near = 0;
    for (const auto& t : loose.triples) {
      if (std::abs(t.defect) <= 1e-9 * loose.omega_scale) continue;
      ++near;
      REQUIRE_FALSE(rule(sp.lattice().mode(t.k), t.j1, sp.lattice().mode(t.l), t.j2, sp.lattice().mode(t.m), t.j3));
    }
    REQUIRE(near > 0);
  }
}

TEST_CASE("incompressible and acoustic split", "[navier_stokes]") {
  const Operators ops = testing::cns_operators(2, 4);
  const SystemSpec& s = *ops.spec;
  const FrequencyLattice& lat = ops.lattice();
  SECTION("random state: sum, constraints, Pythagoras") {
    for (int seed = 0; seed < 5; ++seed) {
      const SpectralState w = random_state(lat, 4, 50 + seed, 1.0);
      const WcnsSplit sp = decompose_wcns(ops.spectrum, w);
      REQUIRE(((sp.incompressible + sp.acoustic).coeffs - w.coeffs).norm() <= 1e-15 * w.coeffs.norm());
      REQUIRE(incompressible_defect(kGas, {}, sp.incompressible) <= 1e-10);
      REQUIRE(acoustic_defect(kGas, {}, sp.acoustic) <= 1e-10);
      const double n2 = std::pow(norm_h(s, w), 2);
      REQUIRE(std::abs(n2 - std::pow(norm_h(s, sp.incompressible), 2) - std::pow(norm_h(s, sp.acoustic), 2)) <=
              1e-10 * n2);
    }
  }
  SECTION("already incompressible data have no acoustic part") {
    SpectralState w(lat, 4);
    const std::size_t i = static_cast<std::size_t>(lat.index(Mode{1, 2, 0}));
    CVec v(4);
    v << -1.0, 2.0, -1.0, 1.0;  // u perpendicular to k, p_rho rho + p_theta theta = 0
    w.coeffs.col(i) = v;
    w.coeffs.col(lat.negated(i)) = v.conjugate();
    REQUIRE(decompose_wcns(ops.spectrum, w).acoustic.coeffs.cwiseAbs().maxCoeff() <= 1e-12);
  }
  SECTION("a pure acoustic mode has no incompressible part") {
    SpectralState w(lat, 4);
    const Mode k{2, 1, 0};
    w.coeffs.col(lat.index(k)) = acoustic_basis(kGas, {}, k, 2).first;
    REQUIRE(decompose_wcns(ops.spectrum, w).incompressible.coeffs.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("weakly compressible dynamics", "[navier_stokes]") {
  SECTION("incompressible data stay incompressible") {
    const Operators ops = testing::cns_operators(2, 4);
    SpectralState w = decompose_wcns(ops.spectrum, random_state(ops.lattice(), 4, 77, 2.0)).incompressible;
    normalize_energy(*ops.spec, w, 0.5);
    SimulationConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 0.5;
    cfg.diagnostics_every = 50;
    const SimulationResult r = simulate(ops, w, cfg);
    for (const auto& snap : r.snapshots)
      REQUIRE(norm_h(*ops.spec, decompose_wcns(ops.spectrum, snap).acoustic) <= 1e-10 * norm_h(*ops.spec, w));
  }
  SECTION("incompressible part follows the reference incompressible solver") {
    const Operators ops = testing::cns_operators(2, 4);
    SpectralState w = decompose_wcns(ops.spectrum, random_state(ops.lattice(), 4, 78, 2.0)).incompressible;
    normalize_energy(*ops.spec, w, 0.5);
    SimulationConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 0.5;
    cfg.diagnostics_every = 500;
    const SpectralState got = simulate(ops, w, cfg).snapshots.back();
    const testing::IncompressibleReference ref(ops.lattice(), kGas, kTransport, {});
    const SpectralState want = ref.solve(w, 0.5, 1e-3);
    REQUIRE(rel_diff_states(*ops.spec, decompose_wcns(ops.spectrum, got).incompressible, want) <= 1e-6);
  }
  SECTION("without the quadratic term acoustic modes decay at the acoustic diffusivity") {
    Operators ops = testing::cns_operators(2, 4);
    ops.nonlinear = false;
    const double c = sound_speed(kGas, {});
    const double nu = acoustic_diffusivity(kGas, kTransport, {});
    const Mode k{2, 1, 0};
    const std::size_t i = static_cast<std::size_t>(ops.lattice().index(k));
    const auto [plus, minus] = acoustic_basis(kGas, {}, k, 2);
    SpectralState w(ops.lattice(), 4);
    w.coeffs.col(i) = plus + 0.5 * minus;
    w.coeffs.col(ops.lattice().negated(i)) = w.at(i).conjugate();
    SimulationConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 1.0;
    const SpectralState out = simulate(ops, w, cfg).snapshots.back();
    const double kn = std::sqrt(5.0);
    const double t = out.time;
    const CVec expect = std::exp(Complex(-nu * 5.0 * t, -c * kn * t)) * plus +
                        0.5 * std::exp(Complex(-nu * 5.0 * t, c * kn * t)) * minus;
    REQUIRE((out.at(i) - expect).norm() <= 1e-9 * expect.norm());
  }
}

TEST_CASE("resonance statistics and empirical constants", "[navier_stokes]") {
  const Operators ops = testing::cns_operators(2, 4);
  const auto stats = resonance_statistics(ops.spectrum, ops.table);
  std::size_t total = 0;
  for (const auto& [key, n] : stats) total += n;
  REQUIRE(total == ops.table.triples.size());
  REQUIRE(stats.count("0 0 0") == 1);
  REQUIRE(stats.count("+ + +") == 1);
  const EmpiricalConstants ec = extract_empirical_constants(*ops.spec, kGas, {}, ops.spectrum, ops.table);
  REQUIRE(std::isfinite(ec.c1));
  REQUIRE(std::isfinite(ec.c4));
  REQUIRE(ec.c4 != 0.0);
  REQUIRE(ec.samples > 0);
}

TEST_CASE("conserved-variable spec is the conjugate of the primitive one", "[navier_stokes]") {
  const testing::ConservedIdealGas gas;
  const SystemSpec prim = cns_preset(2);
  const Mat r = conserved_jacobian(kGas, {}, 2);
  const SystemSpec cons = gas.spec(prim, r, {});
  const SystemSpec conj = change_of_variables(prim, r.inverse());
  for (int a = 0; a < 2; ++a) {
    REQUIRE(rel_diff(cons.advection(a), conj.advection(a)) <= 1e-12);
    for (int c = 0; c < 4; ++c) REQUIRE(rel_diff(cons.quadratic(a, c), conj.quadratic(a, c)) <= 1e-12);
  }
  REQUIRE(rel_diff(cons.entropy_hessian(), conj.entropy_hessian()) <= 1e-12);
  REQUIRE(validate_entropy_structure(cons, 32).passed);
}
