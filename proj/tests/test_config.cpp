#include "catch_amalgamated.hpp"

#include "support/helpers.hpp"

using namespace wndkit;

namespace {

RunConfig parse(const std::string& text) { return parse_run_config(parse_json_text(text, "test.json")); }

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

void require_bitwise_equal(const SystemSpec& a, const SystemSpec& b) {
  REQUIRE(a.dim() == b.dim());
  REQUIRE(a.ncomp() == b.ncomp());
  REQUIRE(a.state() == b.state());
  REQUIRE(a.entropy_hessian() == b.entropy_hessian());
  REQUIRE(a.advection().size() == b.advection().size());
  for (std::size_t i = 0; i < a.advection().size(); ++i) REQUIRE(a.advection()[i] == b.advection()[i]);
  for (std::size_t i = 0; i < a.diffusion().size(); ++i) REQUIRE(a.diffusion()[i] == b.diffusion()[i]);
  for (std::size_t i = 0; i < a.quadratic().size(); ++i) REQUIRE(a.quadratic()[i] == b.quadratic()[i]);
}

}  // namespace

TEST_CASE("spec JSON round trip is bit-exact", "[config]") {
  for (const auto& name : preset_names()) {
    INFO(name);
    const SystemSpec s = preset(name);
    const std::string text = spec_to_json(s).dump();
    require_bitwise_equal(spec_from_json(Json::parse(text)), s);
  }
  SECTION("awkward values survive") {
    const SystemSpec s = change_of_variables(ns::cns_preset(2), wndkit::testing::random_transform(4, 31));
    require_bitwise_equal(spec_from_json(Json::parse(spec_to_json(s).dump())), s);
  }
}

TEST_CASE("spec JSON errors", "[config]") {
  Json j = spec_to_json(canonical_2x2());
  SECTION("wrong tensor shape") {
    j["advection"]["shape"] = {1, 2, 3};
    REQUIRE_THROWS(spec_from_json(j));
  }
  SECTION("missing field") {
    j.erase("state");
    REQUIRE_THROWS_AS(spec_from_json(j), DomainError);
  }
}

TEST_CASE("run config parsing", "[config]") {
  SECTION("preset name with defaults") {
    const RunConfig c = parse(R"({"system": "ideal-gas-2d"})");
    REQUIRE(c.is_cns());
    REQUIRE(c.exact_rule);
    REQUIRE(c.lattice_k == 4);
    REQUIRE(c.spec->dim() == 2);
    REQUIRE(c.alphas.size() == 32);
  }
  SECTION("preset with transport and simulation block") {
    const RunConfig c = parse(R"({
      "system": {"preset": "ideal-gas-1d", "transport": {"mu": 2.0, "kappa": 0.5}},
      "lattice_k": 6,
      "simulation": {"dt": 0.01, "t_end": 2, "integrator": "if_rk2", "diagnostics_every": 5,
                     "initial": {"type": "random", "seed": 9, "decay": 3, "energy": 0.25}}
    })");
    REQUIRE(c.transport.mu == 2.0);
    REQUIRE(c.transport.kappa == 0.5);
    REQUIRE(c.lattice_k == 6);
    REQUIRE(c.simulation.dt == 0.01);
    REQUIRE(c.simulation.integrator == Integrator::if_rk2);
    REQUIRE(c.initial.seed == 9);
    const Operators ops = build_operators(c);
    const SpectralState w = initial_state(c, ops);
    REQUIRE(0.5 * std::pow(norm_h(*ops.spec, w), 2) == Catch::Approx(0.25).epsilon(1e-14));
    REQUIRE(w.reality_defect() <= 1e-15);
  }
  SECTION("inline spec") {
    Json j;
    j["system"] = spec_to_json(scalar_advection_diffusion(1.0, 0.2, 1.0));
    const RunConfig c = parse_run_config(j);
    REQUIRE_FALSE(c.is_cns());
    REQUIRE_FALSE(c.exact_rule);
    REQUIRE(c.spec->diffusion()[0](0, 0) == 0.2);
  }
  SECTION("explicit modes are mirrored to keep the field real") {
    const RunConfig c = parse(R"({"system": "canonical-2x2", "lattice_k": 2,
      "simulation": {"initial": {"type": "modes", "modes": [{"xi": [1], "re": [1, 0], "im": [0, 2]}]}}})");
    const Operators ops = build_operators(c);
    const SpectralState w = initial_state(c, ops);
    const auto& lat = ops.lattice();
    REQUIRE(w.coeffs(1, lat.index(Mode{1, 0, 0})) == Complex(0.0, 2.0));
    REQUIRE(w.coeffs(1, lat.index(Mode{-1, 0, 0})) == Complex(0.0, -2.0));
  }
  SECTION("zero initial data") {
    const RunConfig c = parse(R"({"system": "ideal-gas-2d", "simulation": {"initial": {"type": "zero"}}})");
    const Operators ops = build_operators(c);
    REQUIRE(initial_state(c, ops).coeffs.isZero(0.0));
  }
}

TEST_CASE("run config errors", "[config]") {
  SECTION("syntax errors report line and column") {
    const std::string msg = error_of("{\n  \"system\": \"ideal-gas-2d\",\n  \"lattice_k\": ,\n}");
    REQUIRE(msg.find("line 3, column 16") != std::string::npos);
  }
  SECTION("line_column counts from one") {
    REQUIRE(line_column("ab\ncd", 0) == "line 1, column 1");
    REQUIRE(line_column("ab\ncd", 4) == "line 2, column 2");
  }
  SECTION("semantic errors") {
    REQUIRE_FALSE(error_of(R"({"system": "no-such-preset"})").empty());
    REQUIRE_FALSE(error_of(R"({"system": "ideal-gas-2d", "lattice_k": 0})").empty());
    REQUIRE_FALSE(error_of(R"({"system": "ideal-gas-2d", "simulation": {"dt": -1}})").empty());
    REQUIRE_FALSE(error_of(R"({"system": "ideal-gas-2d", "simulation": {"integrator": "euler"}})").empty());
    REQUIRE_FALSE(error_of(R"({"system": "ideal-gas-2d", "typo": 1})").empty());
    REQUIRE_FALSE(error_of(R"({"lattice_k": 3})").empty());
    REQUIRE_FALSE(error_of(R"({"system": "canonical-2x2", "resonance": {"exact_rule": true}})").empty());
    REQUIRE_FALSE(error_of(R"({"system": "ideal-gas-2d", "dissipativity": {"alphas": [1, -2]}})").empty());
    REQUIRE_FALSE(error_of(R"({"system": "ideal-gas-2d", "lattice_k": "four"})").empty());
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
  }
}
