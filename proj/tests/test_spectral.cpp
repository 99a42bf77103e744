#include "catch_amalgamated.hpp"

#include "support/helpers.hpp"

#include <numbers>
#include <sstream>

using namespace wndkit;
using wndkit::testing::rel_diff;

namespace {

SystemSpec pauli_x() {
  Mat a(2, 2);
  a << 0, 1, 1, 0;
  return SystemSpec(1, 2, Vec::Zero(2), {a}, {Mat::Zero(2, 2)}, {Mat::Zero(2, 2), Mat::Zero(2, 2)},
                    Mat::Identity(2, 2));
}

void check_projector_invariants(const SystemSpec& spec, const ModeDecomposition& dec) {
  const int n = spec.ncomp();
  const Mat& g = spec.entropy_hessian();
  Mat sum = Mat::Zero(n, n);
  Mat recon = Mat::Zero(n, n);
  for (int j = 0; j < dec.count(); ++j) {
    const Mat& p = dec.projectors[j];
    sum += p;
    recon += dec.frequencies[j] * p;
    REQUIRE((p.transpose() * g - g * p).norm() <= 1e-11 * g.norm());
    for (int k = 0; k < dec.count(); ++k) {
      const Mat expect = j == k ? p : Mat::Zero(n, n);
      REQUIRE((p * dec.projectors[k] - expect).norm() <= 1e-11);
    }
  }
  REQUIRE((sum - Mat::Identity(n, n)).norm() <= 1e-12);
  const Mat a = symbol_advection(spec, mode_to_vec(dec.xi, spec.dim()));
  REQUIRE((recon - a).norm() <= 1e-11 * std::max(1.0, a.norm()));
}

}  // namespace

TEST_CASE("lattice ordering, negation and lookup", "[spectral]") {
  const FrequencyLattice lat(2, 3);
  REQUIRE(lat.size() == 49);
  REQUIRE(is_zero(lat.mode(lat.zero_index())));
  for (std::size_t i = 0; i < lat.size(); ++i) {
    REQUIRE(lat.index(lat.mode(i)) == static_cast<long>(i));
    REQUIRE(lat.mode(lat.negated(i)) == negate(lat.mode(i)));
    if (i > 0) REQUIRE(lat.mode(i - 1) < lat.mode(i));
  }
  REQUIRE(lat.index(Mode{4, 0, 0}) == -1);
  REQUIRE(FrequencyLattice(1, 0).size() == 1);
}

TEST_CASE("decomposition of the zero wavevector", "[spectral]") {
  const SystemSpec cns = ns::cns_preset(2);
  const ModeDecomposition dec = decompose(cns, Mode{});
  REQUIRE(dec.count() == 1);
  REQUIRE(dec.frequencies[0] == 0.0);
  REQUIRE((dec.projectors[0] - Mat::Identity(4, 4)).norm() <= 1e-12);
}

TEST_CASE("decomposition of the symmetric 2x2 symbol", "[spectral]") {
  const SystemSpec s = pauli_x();
  const ModeDecomposition dec = decompose(s, Mode{1, 0, 0});
  REQUIRE(dec.count() == 2);
  REQUIRE(dec.frequencies[0] == Catch::Approx(-1.0).epsilon(1e-14));
  REQUIRE(dec.frequencies[1] == Catch::Approx(1.0).epsilon(1e-14));
  Mat pm(2, 2), pp(2, 2);
  pm << 0.5, -0.5, -0.5, 0.5;
  pp << 0.5, 0.5, 0.5, 0.5;
  REQUIRE((dec.projectors[0] - pm).norm() <= 1e-14);
  REQUIRE((dec.projectors[1] - pp).norm() <= 1e-14);
  check_projector_invariants(s, dec);
}

TEST_CASE("ideal-gas modes carry three frequencies with a d-dimensional null space", "[spectral]") {
  const SystemSpec cns = ns::cns_preset(2);
  const double c = ns::sound_speed(ns::ideal_gas(3.0), {});
  const Spectrum sp = frequency_spectrum(cns, FrequencyLattice(2, 4));
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const auto& dec = sp.at(i);
    if (is_zero(dec.xi)) continue;
    const double k = std::sqrt(static_cast<double>(norm2(dec.xi)));
    REQUIRE(dec.count() == 3);
    REQUIRE(dec.frequencies[0] == Catch::Approx(-c * k).epsilon(1e-12));
    REQUIRE(std::abs(dec.frequencies[1]) <= 1e-12 * k);
    REQUIRE(dec.frequencies[2] == Catch::Approx(c * k).epsilon(1e-12));
    REQUIRE(dec.rank(1) == 2);
    check_projector_invariants(cns, dec);
  }
}

TEST_CASE("one-dimensional ideal gas has frequencies -c, 0, c at unit wavenumber", "[spectral]") {
  const SystemSpec cns = ns::cns_preset(1);
  const ModeDecomposition dec = decompose(cns, Mode{1, 0, 0});
  const double c = std::sqrt(5.0 / 3.0);
  REQUIRE(dec.count() == 3);
  REQUIRE(dec.frequencies[0] == Catch::Approx(-c).epsilon(1e-12));
  REQUIRE(dec.frequencies[2] == Catch::Approx(c).epsilon(1e-12));
}

TEST_CASE("group action", "[spectral]") {
  SECTION("closed form on the 2x2 symbol") {
    const ModeDecomposition dec = decompose(pauli_x(), Mode{1, 0, 0});
    CVec v(2);
    v << 1.0, 0.0;
    const CVec out = evolve_group(dec, std::numbers::pi / 2, v);
    REQUIRE(std::abs(out(0)) <= 1e-15);
    REQUIRE(std::abs(out(1) - Complex(0.0, -1.0)) <= 1e-15);
    REQUIRE((evolve_group(dec, 0.0, v) - v).norm() <= 1e-15);
  }
  SECTION("group law and G-norm preservation on the ideal gas") {
    const SystemSpec cns = ns::cns_preset(2);
    const ModeDecomposition dec = decompose(cns, Mode{2, -1, 0});
    const Mat& g = cns.entropy_hessian();
    for (int i = 0; i < 20; ++i) {
      CVec v(4);
      for (int c = 0; c < 4; ++c) v(c) = Complex(counter_normal(3, 8 * i + 2 * c), counter_normal(3, 8 * i + 2 * c + 1));
      const double t = 2.0 * counter_normal(4, 2 * i);
      const double s = 2.0 * counter_normal(4, 2 * i + 1);
      const CVec lhs = evolve_group(dec, t, evolve_group(dec, s, v));
      REQUIRE((lhs - evolve_group(dec, t + s, v)).norm() <= 1e-12 * v.norm());
      const double big_t = 1e3 * counter_uniform(6, i) * (i % 2 ? 1.0 : -1.0);
      REQUIRE(std::sqrt(g_norm2(g, evolve_group(dec, big_t, v))) ==
              Catch::Approx(std::sqrt(g_norm2(g, v))).epsilon(1e-12));
    }
  }
}

TEST_CASE("spectrum over small lattices", "[spectral]") {
  SECTION("K = 0 holds only the zero mode") {
    const Spectrum sp = frequency_spectrum(ns::cns_preset(2), FrequencyLattice(2, 0));
    REQUIRE(sp.size() == 1);
    REQUIRE(is_zero(sp.at(0).xi));
  }
  SECTION("scalar advection frequencies are a * xi") {
    const SystemSpec s = scalar_advection_diffusion(1.0, 0.0, 0.0);
    const Spectrum sp = frequency_spectrum(s, FrequencyLattice(1, 2));
    for (int i = 0; i < 5; ++i) {
      REQUIRE(sp.at(i).count() == 1);
      REQUIRE(sp.at(i).frequencies[0] == Catch::Approx(i - 2.0).margin(1e-15));
    }
  }
}

TEST_CASE("reality pairing of the spectrum", "[spectral]") {
  const SystemSpec cns = ns::cns_preset(2);
  const Spectrum sp = frequency_spectrum(cns, FrequencyLattice(2, 3));
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const auto& a = sp.at(i);
    const auto& b = sp.at(sp.lattice().negated(i));
    REQUIRE(a.count() == b.count());
    const int n = a.count();
    for (int j = 0; j < n; ++j) {
      REQUIRE(std::abs(a.frequencies[j] + b.frequencies[n - 1 - j]) <= 1e-11);
      REQUIRE((a.projectors[j] - b.projectors[n - 1 - j]).norm() <= 1e-11);
    }
  }
}

TEST_CASE("decomposition is covariant under change of variables", "[spectral]") {
  const SystemSpec cns = ns::cns_preset(2);
  const Mat t = wndkit::testing::random_transform(4, 17);
  const SystemSpec primed = change_of_variables(cns, t);
  const Mat tinv = t.inverse();
  for (const Mode& m : {Mode{1, 0, 0}, Mode{2, 3, 0}, Mode{-1, 4, 0}}) {
    const ModeDecomposition a = decompose(cns, m);
    const ModeDecomposition b = decompose(primed, m);
    REQUIRE(a.count() == b.count());
    for (int j = 0; j < a.count(); ++j) {
      REQUIRE(std::abs(a.frequencies[j] - b.frequencies[j]) <= 1e-10);
      REQUIRE(rel_diff(b.projectors[j], Mat(tinv * a.projectors[j] * t)) <= 1e-9);
    }
  }
}

TEST_CASE("spectrum CSV lists one row per frequency", "[spectral]") {
  const Spectrum sp = frequency_spectrum(ns::cns_preset(1), FrequencyLattice(1, 1));
  std::ostringstream os;
  write_spectrum_csv(os, sp);
  const std::string text = os.str();
  REQUIRE(text.rfind("xi0,j,omega,rank\n", 0) == 0);
  REQUIRE(std::count(text.begin(), text.end(), '\n') == 1 + 3 + 1 + 3);
}
