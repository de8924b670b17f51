#pragma once

// Batch runner behind the recombsim executable: reads a configuration, runs one
// subcommand and writes its artifacts. Messages go to the diagnostic stream,
// data only to files.

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "recomb/config.hpp"
#include "recomb/diagnostics.hpp"
#include "recomb/finite_population.hpp"
#include "recomb/kinetics.hpp"
#include "recomb/random.hpp"

namespace recomb::cli {

using config::json;

enum ExitCode : int { ok = 0, validation_failure = 1, numeric_failure = 2, audit_failure = 3 };

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      if (!first) text_ += ',';
      text_ += h;
      first = false;
    }
    text_ += '\n';
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((append(cells, first)), ...);
    text_ += '\n';
  }

  const std::string& text() const { return text_; }

 private:
  void append(double v, bool& first) { put(format_double(v), first); }
  void append(const std::string& v, bool& first) { put(v, first); }
  void append(std::uint64_t v, bool& first) { put(std::to_string(v), first); }
  void put(const std::string& s, bool& first) {
    if (!first) text_ += ',';
    text_ += s;
    first = false;
  }

  std::string text_;
};

/// Collects artifacts of one run and lists them in manifest.txt, whose first
/// line is the only place a wall-clock timestamp appears.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    f << content;
    if (!f) throw ValidationError("cannot write " + (dir_ / name).string());
    files_.emplace_back(name, content.size());
  }

  void write_json(const std::string& name, const json& doc) { write(name, doc.dump(2) + "\n"); }

  void finish(const std::string& subcommand) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
    std::string text = std::string("# generated ") + stamp + "\n";
    text += "subcommand " + subcommand + "\n";
    for (const auto& [name, size] : files_) text += name + " " + std::to_string(size) + "\n";
    std::ofstream(dir_ / "manifest.txt", std::ios::binary) << text;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::size_t>> files_;
};

namespace detail {

inline json distribution_json(const Distribution& d) { return std::vector<double>(d.probs().begin(), d.probs().end()); }

inline std::string law_csv(const Distribution& d, const AlphabetSpec& alphabet) {
  Csv csv{"index", "genome", "probability"};
  for (GenomeIndex x = 0; x < d.size(); ++x) csv.row(std::uint64_t{x}, alphabet.format_genome(x), d[x]);
  return csv.text();
}

inline int run_validate(const config::ExperimentConfig& cfg, OutputDir& out) {
  json report;
  const auto mv = validate(cfg.sites, cfg.alphabet.k(), cfg.alphabet.n());
  report["mutation"] = {{"ok", mv.ok}, {"message", mv.message}};
  if (mv.site) report["mutation"]["site"] = *mv.site;
  const auto rec = cfg.recombination_model();
  report["recombination"] = {{"ok", true}, {"warnings", rec.warnings()}, {"members", rec.family().size()}};
  report["ok"] = mv.ok;
  out.write_json("validation.json", report);
  for (const auto& w : rec.warnings()) std::cerr << "warning: " << w << "\n";
  if (!mv.ok) {
    std::cerr << "error: mutation model invalid";
    if (mv.site) std::cerr << " at site " << *mv.site;
    std::cerr << ": " << mv.message << "\n";
    return validation_failure;
  }
  std::cerr << "model valid: " << cfg.alphabet.size() << " genomes, " << rec.family().size() << " family members\n";
  return ok;
}

inline int run_stationary(const config::ExperimentConfig& cfg, OutputDir& out) {
  const auto mut = cfg.mutation_model();
  out.write("stationary.csv", law_csv(mut.q_lambda(), cfg.alphabet));
  json sites = json::array();
  for (const auto& law : mut.site_laws()) sites.push_back(distribution_json(law));
  out.write_json("site_laws.json", {{"site_laws", sites}});
  std::cerr << "wrote stationary law over " << cfg.alphabet.size() << " genomes\n";
  return ok;
}

inline int run_integrate(const config::ExperimentConfig& cfg, OutputDir& out) {
  const auto mut = cfg.mutation_model();
  const auto rec = cfg.recombination_model();
  const auto mu0 = config::initial_law(cfg.integrator_initial, cfg.alphabet, mut);
  const auto traj = integrate(mu0, mut, rec, cfg.integrator);

  Csv csv{"t", "H", "D", "l1_to_q"};
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    csv.row(traj.times[i], traj.h_values[i], traj.d_values[i], traj.l1_to_q[i]);
  out.write("trajectory.csv", csv.text());
  out.write("final_state.csv", law_csv(traj.final_state, cfg.alphabet));

  json summary;
  summary["converged"] = traj.converged;
  summary["convergence_time"] = traj.converged ? json(traj.convergence_time) : json(nullptr);
  summary["steps"] = traj.steps;
  summary["final_time"] = traj.times.back();
  summary["final_D"] = traj.d_values.back();
  summary["final_l1_to_q"] = traj.l1_to_q.back();
  int code = ok;
  if (traj.d_values.size() >= 2) {
    const auto audit = lyapunov_monotonicity_audit(traj);
    summary["monotonicity"] = {{"pass", audit.pass}, {"max_increase", audit.max_increase}, {"worst_record", audit.worst_step}};
    if (!audit.pass) {
      std::cerr << "audit failed: D increased by " << audit.max_increase << "\n";
      code = audit_failure;
    }
  }
  out.write_json("integrate_summary.json", summary);
  if (traj.converged)
    std::cerr << "converged at t=" << traj.convergence_time << "\n";
  else
    std::cerr << "not converged by t=" << traj.times.back() << " (l1_to_q=" << traj.l1_to_q.back() << ")\n";
  return code;
}

struct SimulationRun {
  std::vector<SimulationResult> replicates;
  MutationModel mut;
};

inline SimulationRun simulate_all(const config::ExperimentConfig& cfg) {
  auto mut = cfg.mutation_model();
  const auto rec = cfg.recombination_model();
  const auto& ss = cfg.simulation;
  const auto start = config::initial_population(ss.initial, ss.population, cfg.alphabet, mut, ss.sim.seed);
  auto reps = simulate_replicates(start, mut, rec, ss.sim);
  return {std::move(reps), std::move(mut)};
}

inline int run_simulate(const config::ExperimentConfig& cfg, OutputDir& out) {
  const auto run = simulate_all(cfg);
  const auto& q = run.mut.q_lambda();
  json reps = json::array();
  double tv_sum = 0.0;
  std::size_t averaged = 0;
  for (std::size_t r = 0; r < run.replicates.size(); ++r) {
    const auto& res = run.replicates[r];
    Csv csv{"t", "index", "genome", "count"};
    for (const auto& s : res.samples)
      for (GenomeIndex x = 0; x < s.counts().size(); ++x)
        if (s.count(x) != 0) csv.row(s.time(), std::uint64_t{x}, cfg.alphabet.format_genome(x), s.count(x));
    out.write("samples_" + std::to_string(r) + ".csv", csv.text());
    json rj = {{"replicate", r},
               {"samples", res.samples.size()},
               {"mutation_events", res.mutation_events},
               {"recombination_events", res.recombination_events},
               {"effective_recombinations", res.effective_recombinations}};
    if (!res.samples.empty()) {
      const double tv = total_variation(time_averaged_law(res.samples), q);
      rj["tv_to_q"] = tv;
      tv_sum += tv;
      ++averaged;
    } else {
      rj["tv_to_q"] = nullptr;
    }
    reps.push_back(std::move(rj));
  }
  json summary;
  summary["population"] = cfg.simulation.population;
  summary["replicates"] = std::move(reps);
  summary["mean_tv_to_q"] = averaged ? json(tv_sum / static_cast<double>(averaged)) : json(nullptr);
  out.write_json("simulate_summary.json", summary);
  if (averaged)
    std::cerr << "mean TV(time-averaged f_N, q) = " << tv_sum / static_cast<double>(averaged) << "\n";
  else
    std::cerr << "no samples inside the window (t_max equals burn_in)\n";
  return ok;
}

inline int run_diagnose(const config::ExperimentConfig& cfg, OutputDir& out) {
  if (cfg.simulation.population < 2) throw ValidationError("/simulation/population: diagnose needs at least 2 individuals");
  const auto run = simulate_all(cfg);
  std::vector<PopulationState> samples;
  for (const auto& r : run.replicates) samples.insert(samples.end(), r.samples.begin(), r.samples.end());
  if (samples.empty()) throw ValidationError("/simulation: no samples inside the window (t_max equals burn_in)");
  const auto observed = mean_hamming_histogram(samples);
  const auto predicted = product_law_hamming_prediction(run.mut);
  const auto ode = hamming_histogram(run.mut.q_lambda());
  Csv csv{"d", "observed", "predicted"};
  for (std::size_t d = 0; d < observed.size(); ++d) csv.row(std::uint64_t{d}, observed[d], predicted[d]);
  out.write("histogram.csv", csv.text());
  const double score = structure_score(observed, predicted);
  json summary;
  summary["samples"] = samples.size();
  summary["structure_score"] = score;
  summary["prediction_check"] = structure_score(ode, predicted);
  out.write_json("diagnose_summary.json", summary);
  std::cerr << "structure score " << score << "\n";
  return ok;
}

/// Seeded random audits of the entropy inequalities and the mutation-part
/// closed form.
inline int run_verify(const config::ExperimentConfig& cfg, OutputDir& out) {
  const auto& v = cfg.verify;
  json checks = json::array();
  std::size_t passed = 0, failed = 0;
  const auto record = [&](const std::string& family, std::size_t instance, bool pass, json detail) {
    detail["family"] = family;
    detail["instance"] = instance;
    detail["pass"] = pass;
    checks.push_back(std::move(detail));
    (pass ? passed : failed) += 1;
  };

  {
    Rng rng(cfg.seed, 1);
    for (std::size_t i = 0; i < v.contraction; ++i) {
      const auto size = 2 + rng.below(v.max_chain_size - 1);
      const auto [p, pi] = random_reversible_chain(size, rng);
      const auto mu = random_distribution(Space(size, 1), rng);
      const auto r = verify_lemma1(p, pi, mu);
      record("contraction", i, r.pass, {{"size", size}, {"slack", r.slack}});
    }
  }

  const auto& space = cfg.alphabet.space();
  const auto rec = cfg.recombination_model();
  {
    Rng rng(cfg.seed, 2);
    for (std::size_t i = 0; i < v.entropy_chain; ++i) {
      const auto mu = random_distribution(space, rng);
      const auto mask = random_nonempty_mask(space.length(), rng);
      const auto r = verify_entropy_chain(mu, mask, rec, v.dt);
      record("entropy_chain", i, r.pass,
             {{"mask", mask.to_string()},
              {"cross_residual", r.cross_residual},
              {"h_slack", r.h_slack},
              {"marginal_residual", r.marginal_residual},
              {"invariance_residual", r.invariance_residual}});
    }
  }

  {
    Rng rng(cfg.seed, 3);
    for (std::size_t i = 0; i < v.entropy_rate; ++i) {
      const auto mut = random_mutation_model(space, rng);
      const auto p = random_distribution(space, rng);
      const auto [fd, mid] = centered_entropy_rate(p, mut, v.fd_step);
      const double rate = relative_entropy_rate_mutation(mid, mut);
      const double rel = std::abs(rate - fd) / std::abs(fd);
      const bool negative = l1_distance(mid, mut.q_lambda()) <= 1e-6 || rate < 0.0;
      record("entropy_rate", i, negative && rel < v.fd_tolerance, {{"rate", rate}, {"finite_difference", fd}, {"relative_error", rel}});
    }
  }

  json report;
  report["passed"] = passed;
  report["failed"] = failed;
  report["checks"] = std::move(checks);
  out.write_json("verify_report.json", report);
  std::cerr << "verify: " << passed << " passed, " << failed << " failed\n";
  return failed == 0 ? ok : audit_failure;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace detail

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"validate", "stationary", "integrate", "simulate", "verify", "diagnose"};
  return names;
}

/// Runs one subcommand. `overrides` are "dotted.key=value" assignments applied
/// to the document before defaults are filled in.
inline int run(const std::string& subcommand, const std::string& config_path, const std::vector<std::string>& overrides,
               std::optional<std::uint64_t> seed = std::nullopt, std::optional<std::string> out_dir = std::nullopt) {
  try {
    auto doc = config::parse(detail::read_file(config_path), config_path);
    for (const auto& o : overrides) config::apply_override(doc, o);
    if (seed) doc["seed"] = *seed;
    if (out_dir) doc["output_dir"] = *out_dir;
    const auto cfg = config::resolve(doc);

    OutputDir out(cfg.output_dir);
    out.write_json("resolved_config.json", cfg.resolved);
    int code = validation_failure;
    if (subcommand == "validate") code = detail::run_validate(cfg, out);
    else if (subcommand == "stationary") code = detail::run_stationary(cfg, out);
    else if (subcommand == "integrate") code = detail::run_integrate(cfg, out);
    else if (subcommand == "simulate") code = detail::run_simulate(cfg, out);
    else if (subcommand == "verify") code = detail::run_verify(cfg, out);
    else if (subcommand == "diagnose") code = detail::run_diagnose(cfg, out);
    else throw ValidationError("unknown subcommand '" + subcommand + "'");
    out.finish(subcommand);
    return code;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return numeric_failure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return validation_failure;
  }
}

/// Command-line entry point.
inline int main(int argc, char** argv) {
  CLI::App app{"Recombination kinetics and finite-population simulation"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "configuration JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (replaces the config value)");
    sub->add_option("--out", out_dir, "output directory (replaces the config value)");
    sub->add_option("--override", overrides, "key=value, dotted keys, repeatable");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, std::cerr, std::cerr);
    return code == 0 ? ok : validation_failure;
  }
  return run(app.get_subcommands().front()->get_name(), config_path, overrides, seed, out_dir);
}

}  // namespace recomb::cli
