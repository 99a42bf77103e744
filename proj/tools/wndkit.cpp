// wndkit command-line driver.
//
// Exit codes: 0 success, 1 analysis failure, 2 input error, 3 blow-up.

#include "wndkit/wndkit.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace wndkit;

namespace {

enum Exit { kOk = 0, kAnalysisFailure = 1, kInputError = 2, kBlowUp = 3 };

struct Options {
  std::string config;
  std::string out;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream os(dir / name);
  if (!os) throw ConfigError("cannot write " + (dir / name).string());
  return os;
}

RunConfig load(const Options& opt) {
  RunConfig cfg = load_run_config(opt.config);
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  if (opt.seed) cfg.initial.seed = *opt.seed;
  return cfg;
}

int cmd_validate(const RunConfig& cfg) {
  const EntropyReport r = validate_entropy_structure(*cfg.spec, cfg.validate_directions);
  auto os = open_out(cfg.output_dir, "validate_report.txt");
  os.precision(17);
  os << "passed = " << (r.passed ? "true" : "false") << '\n';
  os << "min_eigenvalue_G = " << r.min_eigenvalue_g << '\n';
  os << "max_asymmetry = " << r.max_asymmetry << '\n';
  os << "min_diffusion_eigenvalue = " << r.min_diffusion_eigenvalue << '\n';
  os << "min_diffusion_relative = " << r.min_diffusion_relative << '\n';
  os << "directions_checked = " << r.directions_checked << '\n';
  os << "worst_direction =";
  for (Eigen::Index a = 0; a < r.worst_direction.size(); ++a) os << ' ' << r.worst_direction(a);
  os << '\n';
  std::cout << "entropy structure " << (r.passed ? "passed" : "FAILED")
            << " (min_diffusion_eigenvalue = " << r.min_diffusion_eigenvalue
            << ", max_asymmetry = " << r.max_asymmetry << ")\n";
  return r.passed ? kOk : kAnalysisFailure;
}

int cmd_operators(const RunConfig& cfg) {
  const Operators ops = build_operators(cfg);
  const fs::path dir = cfg.output_dir;
  {
    auto os = open_out(dir, "spectrum.csv");
    write_spectrum_csv(os, ops.spectrum);
  }
  {
    auto os = open_out(dir, "dbar.txt");
    write_averaged_diffusion(os, ops.avg);
  }
  {
    auto os = open_out(dir, "resonance.csv");
    write_resonance_csv(os, ops.table);
  }
  // Second enumeration with the other rule, as a cross-check of the count.
  std::size_t recount = ops.table.triples.size();
  if (cfg.exact_rule) recount = build_resonance_table(ops.spectrum, cfg.resonance_tol).triples.size();
  double worst = 0.0;
  {
    auto os = open_out(dir, "cyclic.csv");
    os.precision(17);
    os << "sample,residual\n";
    for (int s = 0; s < cfg.cyclic_samples; ++s) {
      const std::uint64_t base = cfg.initial.seed * 1000003ULL + 3ULL * static_cast<std::uint64_t>(s);
      const SpectralState w1 = random_state(ops.lattice(), ops.ncomp(), base, 1.0);
      const SpectralState w2 = random_state(ops.lattice(), ops.ncomp(), base + 1, 1.0);
      const SpectralState w3 = random_state(ops.lattice(), ops.ncomp(), base + 2, 1.0);
      const double r = cyclic_residual(*ops.spec, *ops.qbar, w1, w2, w3);
      worst = std::max(worst, r);
      os << s << ',' << r << '\n';
    }
  }
  double dbar_max = 0.0;
  for (const Mat& b : ops.avg.blocks) dbar_max = std::max(dbar_max, b.cwiseAbs().maxCoeff());
  {
    auto os = open_out(dir, "operators_summary.txt");
    os.precision(17);
    os << "modes = " << ops.lattice().size() << '\n';
    os << "omega_max = " << ops.spectrum.omega_max() << '\n';
    os << "resonance_rule = " << (cfg.exact_rule ? "exact" : "tolerance") << '\n';
    os << "resonance_tolerance = " << cfg.resonance_tol << '\n';
    os << "resonance_count = " << ops.table.triples.size() << '\n';
    os << "resonance_recount = " << recount << '\n';
    os << "dbar_max_abs = " << dbar_max << '\n';
    os << "cyclic_residual_max = " << worst << '\n';
    if (cfg.is_cns())
      for (const auto& [key, n] : ns::resonance_statistics(ops.spectrum, ops.table))
        os << "resonances[" << key << "] = " << n << '\n';
  }
  std::cout << ops.lattice().size() << " modes, " << ops.table.triples.size() << " resonant triples (recount "
            << recount << "), max cyclic residual " << worst << '\n';
  return (worst <= 1e-10 && recount == ops.table.triples.size()) ? kOk : kAnalysisFailure;
}

int cmd_dissipativity(const RunConfig& cfg) {
  const SystemSpec& spec = *cfg.spec;
  const Spectrum spectrum = frequency_spectrum(spec, FrequencyLattice(spec.dim(), cfg.lattice_k));
  const AveragedDiffusion avg = averaged_diffusion(spec, spectrum);
  const DissipativityReport rep = analyze_dissipativity(spec, avg, cfg.alphas, cfg.fibonacci_directions);
  {
    auto os = open_out(cfg.output_dir, "dissipativity_report.txt");
    write_dissipativity_report(os, rep);
  }
  {
    auto os = open_out(cfg.output_dir, "beta.csv");
    write_beta_csv(os, rep);
  }
  std::cout << "kawashima " << (rep.kawashima_ok ? "ok" : "violated") << ", alpha = " << rep.alpha
            << ", beta = " << rep.beta << ", delta = " << rep.delta << ", delta_empirical = " << rep.delta_empirical
            << '\n';
  const bool ok = rep.criterion_found && rep.delta > 0.0 && rep.delta_consistent();
  return ok ? kOk : kAnalysisFailure;
}

int cmd_simulate(const RunConfig& cfg) {
  const Operators ops = build_operators(cfg);
  const SpectralState w0 = initial_state(cfg, ops);
  try {
    const SimulationResult res = simulate(ops, w0, cfg.simulation);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
    {
      auto os = open_out(cfg.output_dir, "diagnostics.csv");
      write_diagnostics_csv(os, res.diagnostics);
    }
    {
      auto os = open_out(cfg.output_dir, "energy.dat");
      write_energy_dat(os, res.diagnostics);
    }
    {
      auto os = open_out(cfg.output_dir, "trajectory.csv");
      write_trajectory_csv(os, res.snapshots);
    }
    const auto& d = res.diagnostics;
    std::cout << res.steps << " steps of dt = " << res.dt << ", final energy " << d.energy.back()
              << ", budget residual rate " << d.budget_rate() << '\n';
    return kOk;
  } catch (const BlowUpError& e) {
    auto os = open_out(cfg.output_dir, "blowup.txt");
    os.precision(17);
    os << "time = " << e.time() << "\nmode =";
    for (int a = 0; a < ops.lattice().dim(); ++a) os << ' ' << e.mode()[a];
    os << "\nthreshold = " << kBlowUpThreshold << '\n';
    std::cerr << "error: " << e.what() << '\n';
    return kBlowUp;
  }
}

int cmd_wcns_report(const RunConfig& cfg) {
  if (!cfg.is_cns()) throw ConfigError("wcns-report needs an ideal-gas preset");
  const ns::EquationOfState eos = ns::ideal_gas(cfg.transport.d_micro);
  const Operators ops = build_operators(cfg);
  const double c = ns::sound_speed(eos, cfg.reference);
  const double nu = ns::acoustic_diffusivity(eos, cfg.transport, cfg.reference);
  const ns::EmpiricalConstants ec = ns::extract_empirical_constants(*ops.spec, eos, cfg.reference, ops.spectrum, ops.table);
  auto os = open_out(cfg.output_dir, "wcns_report.txt");
  os.precision(17);
  os << "sound_speed = " << c << '\n';
  os << "sound_speed_squared = " << c * c << '\n';
  os << "acoustic_diffusivity = " << nu << '\n';
  os << "c1 = " << ec.c1 << "\nc2 = " << ec.c2 << "\nc3 = " << ec.c3 << "\nc4 = " << ec.c4 << '\n';
  os << "c_fit_residual = " << ec.fit_residual << '\n';
  os << "c_fit_samples = " << ec.samples << '\n';
  os << "resonance_count = " << ops.table.triples.size() << '\n';
  for (const auto& [key, n] : ns::resonance_statistics(ops.spectrum, ops.table))
    os << "resonances[" << key << "] = " << n << '\n';
  std::cout << "c_o = " << c << ", nu_bar = " << nu << ", c4 = " << ec.c4 << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Averaged weakly nonlinear-dissipative approximations of hyperbolic-parabolic systems"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--threads", opt.threads, "worker threads (default: WNDKIT_THREADS or 1)");

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&);
  };
  const Sub subs[] = {
      {"validate", "check the entropy structure of the system", cmd_validate},
      {"operators", "build averaged operators and dump them", cmd_operators},
      {"dissipativity", "Kawashima check, strict criterion and decay rate", cmd_dissipativity},
      {"simulate", "integrate the averaged system", cmd_simulate},
      {"wcns-report", "sound speed, acoustic diffusivity and interaction constants", cmd_wcns_report},
  };
  std::vector<std::pair<CLI::App*, int (*)(const RunConfig&)>> handlers;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", opt.config, "configuration file (JSON)")->required();
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seed", opt.seed, "random seed override");
    sub->add_option("--threads", opt.threads, "worker threads");
    handlers.emplace_back(sub, s.fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }
  set_threads(opt.threads);

  try {
    const RunConfig cfg = load(opt);
    for (const auto& [sub, fn] : handlers)
      if (sub->parsed()) return fn(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const BlowUpError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBlowUp;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kAnalysisFailure;
  }
  return kInputError;
}
