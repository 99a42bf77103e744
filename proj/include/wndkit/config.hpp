#pragma once

// Run configuration for the command-line driver.

#include "wndkit/dissipativity.hpp"
#include "wndkit/io.hpp"
#include "wndkit/solver.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

namespace wndkit {

/// Malformed or inconsistent configuration input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct InitialCondition {
  enum class Kind { random, modes, zero } kind = Kind::random;
  std::uint64_t seed = 1;
  double decay = 2.0;
  double energy = 0.5;     // <= 0 leaves the amplitude as drawn
  double amplitude = 0.0;  // > 0 multiplies after normalization
  bool incompressible = false;
  struct Entry {
    Mode xi{};
    CVec value;
  };
  std::vector<Entry> modes;
};

struct RunConfig {
  std::string preset;  // empty for inline specs
  std::optional<SystemSpec> spec;
  ns::TransportCoefficients transport{1.0, 0.0, 1.0, 3.0};
  ns::ReferenceState reference{};
  int lattice_k = 4;
  double resonance_tol = kDefaultResonanceTol;
  bool exact_rule = false;
  std::vector<double> alphas = default_alpha_grid();
  int fibonacci_directions = kFibonacciDirections;
  int validate_directions = 64;
  SimulationConfig simulation;
  bool nonlinear = true;
  InitialCondition initial;
  int cyclic_samples = 10;
  std::string output_dir = "out";

  bool is_cns() const { return is_cns_preset(preset); }
};

/// "line L, column C" for a byte offset into text.
inline std::string line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // byte is one past the offending character
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError(source + ": " + line_column(text, at) + ": " + e.what());
  }
}

namespace detail {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& j) {
  RunConfig cfg;
  try {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    detail::reject_unknown(j, {"system", "lattice_k", "resonance", "dissipativity", "simulation", "validate",
                               "operators", "output"},
                           "config");
    if (!j.contains("system")) throw ConfigError("config: missing 'system'");
    const Json& sys = j.at("system");
    if (sys.is_string()) {
      cfg.preset = sys.get<std::string>();
    } else if (sys.is_object() && sys.contains("preset")) {
      detail::reject_unknown(sys, {"preset", "transport", "reference"}, "system");
      cfg.preset = sys.at("preset").get<std::string>();
      if (sys.contains("transport")) {
        const Json& t = sys.at("transport");
        detail::reject_unknown(t, {"mu", "lambda", "kappa", "d_micro"}, "system.transport");
        cfg.transport.mu = detail::get_or(t, "mu", cfg.transport.mu);
        cfg.transport.lambda = detail::get_or(t, "lambda", cfg.transport.lambda);
        cfg.transport.kappa = detail::get_or(t, "kappa", cfg.transport.kappa);
        cfg.transport.d_micro = detail::get_or(t, "d_micro", cfg.transport.d_micro);
      }
      if (sys.contains("reference")) {
        const Json& r = sys.at("reference");
        detail::reject_unknown(r, {"rho", "theta"}, "system.reference");
        cfg.reference.rho = detail::get_or(r, "rho", cfg.reference.rho);
        cfg.reference.theta = detail::get_or(r, "theta", cfg.reference.theta);
      }
    } else if (sys.is_object()) {
      cfg.spec = spec_from_json(sys);
    } else {
      throw ConfigError("config: 'system' must be a preset name or an object");
    }
    if (!cfg.preset.empty()) cfg.spec = preset(cfg.preset, cfg.transport, cfg.reference);

    cfg.lattice_k = detail::get_or(j, "lattice_k", cfg.lattice_k);
    if (cfg.lattice_k < 1) throw ConfigError("config: lattice_k must be >= 1");

    if (j.contains("resonance")) {
      const Json& r = j.at("resonance");
      detail::reject_unknown(r, {"tolerance", "exact_rule"}, "resonance");
      cfg.resonance_tol = detail::get_or(r, "tolerance", cfg.resonance_tol);
      cfg.exact_rule = detail::get_or(r, "exact_rule", cfg.exact_rule);
      if (!(cfg.resonance_tol >= 0.0)) throw ConfigError("resonance.tolerance must be >= 0");
    } else {
      cfg.exact_rule = cfg.is_cns();
    }
    if (cfg.exact_rule && !cfg.is_cns())
      throw ConfigError("resonance.exact_rule is only available for the ideal-gas presets");

    if (j.contains("dissipativity")) {
      const Json& dsp = j.at("dissipativity");
      detail::reject_unknown(dsp, {"alphas", "alpha_min", "alpha_max", "alpha_points", "fibonacci_directions"},
                             "dissipativity");
      if (dsp.contains("alphas")) {
        cfg.alphas = dsp.at("alphas").get<std::vector<double>>();
      } else {
        cfg.alphas = log_grid(detail::get_or(dsp, "alpha_min", 1e-2), detail::get_or(dsp, "alpha_max", 1e2),
                              detail::get_or(dsp, "alpha_points", 32));
      }
      for (double a : cfg.alphas)
        if (!(a > 0.0)) throw ConfigError("dissipativity: alphas must be positive");
      if (cfg.alphas.empty()) throw ConfigError("dissipativity: empty alpha grid");
      cfg.fibonacci_directions = detail::get_or(dsp, "fibonacci_directions", cfg.fibonacci_directions);
    }
    if (j.contains("validate")) {
      const Json& v = j.at("validate");
      detail::reject_unknown(v, {"directions"}, "validate");
      cfg.validate_directions = detail::get_or(v, "directions", cfg.validate_directions);
      if (cfg.validate_directions < 1) throw ConfigError("validate.directions must be >= 1");
    }
    if (j.contains("operators")) {
      const Json& o = j.at("operators");
      detail::reject_unknown(o, {"cyclic_samples"}, "operators");
      cfg.cyclic_samples = detail::get_or(o, "cyclic_samples", cfg.cyclic_samples);
    }

    if (j.contains("simulation")) {
      const Json& s = j.at("simulation");
      detail::reject_unknown(s, {"dt", "t_end", "integrator", "diagnostics_every", "sobolev_orders", "nonlinear",
                                 "initial", "seed"},
                             "simulation");
      cfg.simulation.dt = detail::get_or(s, "dt", 0.0);
      if (s.contains("dt") && !(cfg.simulation.dt > 0.0)) throw ConfigError("simulation.dt must be > 0");
      cfg.simulation.t_end = detail::get_or(s, "t_end", cfg.simulation.t_end);
      if (!(cfg.simulation.t_end >= 0.0)) throw ConfigError("simulation.t_end must be >= 0");
      cfg.simulation.integrator = parse_integrator(detail::get_or<std::string>(s, "integrator", "if_rk4"));
      cfg.simulation.diagnostics_every = detail::get_or(s, "diagnostics_every", cfg.simulation.diagnostics_every);
      if (cfg.simulation.diagnostics_every < 1) throw ConfigError("simulation.diagnostics_every must be >= 1");
      cfg.simulation.sobolev_orders = detail::get_or(s, "sobolev_orders", cfg.simulation.sobolev_orders);
      cfg.nonlinear = detail::get_or(s, "nonlinear", cfg.nonlinear);
      cfg.initial.seed = detail::get_or<std::uint64_t>(s, "seed", cfg.initial.seed);
      if (s.contains("initial")) {
        const Json& ic = s.at("initial");
        detail::reject_unknown(ic, {"type", "seed", "decay", "energy", "amplitude", "incompressible", "modes"},
                               "simulation.initial");
        const std::string type = detail::get_or<std::string>(ic, "type", "random");
        if (type == "random") {
          cfg.initial.kind = InitialCondition::Kind::random;
        } else if (type == "modes") {
          cfg.initial.kind = InitialCondition::Kind::modes;
        } else if (type == "zero") {
          cfg.initial.kind = InitialCondition::Kind::zero;
        } else {
          throw ConfigError("simulation.initial.type must be random, modes or zero");
        }
        cfg.initial.seed = detail::get_or<std::uint64_t>(ic, "seed", cfg.initial.seed);
        cfg.initial.decay = detail::get_or(ic, "decay", cfg.initial.decay);
        cfg.initial.energy = detail::get_or(ic, "energy", cfg.initial.energy);
        cfg.initial.amplitude = detail::get_or(ic, "amplitude", cfg.initial.amplitude);
        cfg.initial.incompressible = detail::get_or(ic, "incompressible", cfg.initial.incompressible);
        if (ic.contains("modes")) {
          const int n = cfg.spec->ncomp();
          for (const Json& e : ic.at("modes")) {
            InitialCondition::Entry entry;
            const auto xi = e.at("xi").get<std::vector<int>>();
            if (static_cast<int>(xi.size()) != cfg.spec->dim())
              throw ConfigError("simulation.initial.modes: xi length must equal dim");
            for (std::size_t a = 0; a < xi.size(); ++a) entry.xi[a] = xi[a];
            const auto re = e.at("re").get<std::vector<double>>();
            const auto im = detail::get_or(e, "im", std::vector<double>(re.size(), 0.0));
            if (static_cast<int>(re.size()) != n || static_cast<int>(im.size()) != n)
              throw ConfigError("simulation.initial.modes: re/im length must equal ncomp");
            entry.value = CVec(n);
            for (int c = 0; c < n; ++c) entry.value(c) = Complex(re[c], im[c]);
            cfg.initial.modes.push_back(entry);
          }
        }
      }
    }
    if (j.contains("output")) {
      const Json& o = j.at("output");
      detail::reject_unknown(o, {"directory"}, "output");
      cfg.output_dir = detail::get_or(o, "directory", cfg.output_dir);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(parse_json_text(buf.str(), path));
}

inline Operators build_operators(const RunConfig& cfg) {
  std::function<ResonanceRule(const Spectrum&)> factory;
  if (cfg.exact_rule) factory = [](const Spectrum& s) { return ns::cns_exact_rule(s); };
  Operators ops = build_operators(*cfg.spec, cfg.lattice_k, cfg.resonance_tol, factory);
  ops.nonlinear = cfg.nonlinear;
  return ops;
}

/// Initial state described by the config, on the operators' lattice.
inline SpectralState initial_state(const RunConfig& cfg, const Operators& ops) {
  const FrequencyLattice& lat = ops.lattice();
  const int n = ops.ncomp();
  SpectralState w(lat, n);
  switch (cfg.initial.kind) {
    case InitialCondition::Kind::zero:
      return w;
    case InitialCondition::Kind::modes:
      for (const auto& e : cfg.initial.modes) {
        const long i = lat.index(e.xi);
        if (i < 0) throw ConfigError("simulation.initial.modes: mode outside the lattice");
        w.coeffs.col(i) += e.value;
        w.coeffs.col(lat.negated(static_cast<std::size_t>(i))) += e.value.conjugate();
      }
      w.enforce_reality();
      break;
    case InitialCondition::Kind::random:
      w = random_state(lat, n, cfg.initial.seed, cfg.initial.decay);
      if (cfg.initial.incompressible) {
        if (!cfg.is_cns()) throw ConfigError("simulation.initial.incompressible needs an ideal-gas preset");
        w = ns::decompose_wcns(ops.spectrum, w).incompressible;
      }
      if (cfg.initial.energy > 0.0) normalize_energy(*ops.spec, w, cfg.initial.energy);
      break;
  }
  if (cfg.initial.amplitude > 0.0) w.coeffs *= cfg.initial.amplitude;
  return w;
}

}  // namespace wndkit
