#pragma once

// Experiment configuration: one JSON document, resolved against defaults into
// validated model objects plus a fully materialized echo of every setting.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "recomb/error.hpp"
#include "recomb/finite_population.hpp"
#include "recomb/kinetics.hpp"
#include "recomb/mutation_model.hpp"
#include "recomb/random.hpp"
#include "recomb/recombination_model.hpp"
#include "recomb/state_space.hpp"

namespace recomb::config {

using json = nlohmann::ordered_json;

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& path, const std::string& what) : ValidationError(path + ": " + what) {}
};

/// How to build a starting law (integrator) or starting population (simulator).
/// Written as "q", "uniform", "point:<word or index>", "random:<seed>" or an
/// explicit probability list.
struct InitialSpec {
  std::string kind = "uniform";
  GenomeIndex point = 0;
  std::uint64_t seed = 0;
  std::vector<double> weights;
};

struct SimulationSettings {
  std::uint64_t population = 1000;
  SimConfig sim;
  InitialSpec initial;
};

struct VerifySettings {
  std::size_t contraction = 100;
  std::size_t entropy_chain = 100;
  std::size_t entropy_rate = 100;
  std::size_t max_chain_size = 16;
  double dt = 0.05;
  double fd_step = 0.0;  // 0 picks the step automatically
  double fd_tolerance = 1e-6;
};

struct ExperimentConfig {
  json resolved;
  std::uint64_t seed = 1;
  std::string output_dir;
  AlphabetSpec alphabet{2, 1};
  std::vector<SiteRateMatrix> sites;
  SimilaritySpec similarity = SimilaritySpec::exponential(1.0);
  double kappa = 1.0;
  std::vector<FamilyMember> family;
  IntegratorConfig integrator;
  InitialSpec integrator_initial;
  SimulationSettings simulation;
  VerifySettings verify;

  /// Throws ValidationError if the per-site matrices are not valid generators.
  MutationModel mutation_model() const { return MutationModel(alphabet.space(), sites); }
  RecombinationModel recombination_model() const {
    return RecombinationModel(alphabet.space(), kappa, family, similarity);
  }
};

namespace detail {

inline std::string child(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }
inline std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

inline double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

inline std::uint64_t as_count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ConfigError(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

inline std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

inline bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
  return v.get<bool>();
}

/// One JSON object read field by field; remembers which keys were consumed so
/// misspelled keys are reported instead of silently ignored.
class Section {
 public:
  Section(const json& parent, std::string_view key, std::string parent_path)
      : path_(child(parent_path, key)) {
    if (parent.contains(key)) {
      node_ = &parent.at(std::string(key));
      if (!node_->is_object()) throw ConfigError(path_, "expected an object");
    }
  }

  /// An object reached some other way (array element, document root).
  Section(const json& node, std::string path) : node_(&node), path_(std::move(path)) {
    if (!node.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string field(std::string_view key) const { return child(path_, key); }

  const json* find(std::string_view key) {
    used_.insert(std::string(key));
    if (node_ == nullptr || !node_->contains(key)) return nullptr;
    const auto& v = node_->at(std::string(key));
    return v.is_null() ? nullptr : &v;
  }

  double number(std::string_view key, double fallback) {
    const auto* v = find(key);
    return v ? as_number(*v, field(key)) : fallback;
  }
  std::uint64_t count(std::string_view key, std::uint64_t fallback) {
    const auto* v = find(key);
    return v ? as_count(*v, field(key)) : fallback;
  }
  std::string string(std::string_view key, std::string fallback) {
    const auto* v = find(key);
    return v ? as_string(*v, field(key)) : fallback;
  }
  bool boolean(std::string_view key, bool fallback) {
    const auto* v = find(key);
    return v ? as_bool(*v, field(key)) : fallback;
  }

  void finish() const {
    if (node_ == nullptr) return;
    for (const auto& [key, value] : node_->items())
      if (!used_.count(key)) throw ConfigError(field(key), "unknown field");
  }

 private:
  const json* node_ = nullptr;
  std::string path_;
  std::set<std::string> used_;
};

/// Re-raises a model-level error with the field it came from.
template <class F>
auto at_field(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(path, e.what());
  }
}

inline std::vector<std::vector<double>> read_matrix(const json& v, std::size_t k, const std::string& path) {
  if (!v.is_array() || v.size() != k) throw ConfigError(path, "expected " + std::to_string(k) + " rows");
  std::vector<std::vector<double>> rows(k);
  for (std::size_t a = 0; a < k; ++a) {
    const auto& row = v[a];
    const auto rp = child(path, a);
    if (!row.is_array() || row.size() != k) throw ConfigError(rp, "expected " + std::to_string(k) + " entries");
    for (std::size_t b = 0; b < k; ++b) rows[a].push_back(as_number(row[b], child(rp, b)));
  }
  return rows;
}

/// Off-diagonal rows in, the diagonal is implied by zero row sums.
inline SiteRateMatrix site_matrix(const std::vector<std::vector<double>>& rows) {
  auto off = rows;
  for (std::size_t a = 0; a < off.size(); ++a) off[a][a] = 0.0;
  return SiteRateMatrix::from_off_diagonal(off);
}

inline json matrix_json(const SiteRateMatrix& m) {
  json rows = json::array();
  for (std::size_t a = 0; a < m.k(); ++a) {
    json row = json::array();
    for (std::size_t b = 0; b < m.k(); ++b) row.push_back(a == b ? 0.0 : m(a, b));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline InitialSpec read_initial(const json* v, const std::string& path, const AlphabetSpec& alphabet,
                                const std::string& fallback) {
  InitialSpec s;
  if (v != nullptr && v->is_array()) {
    if (v->size() != alphabet.size())
      throw ConfigError(path, "expected " + std::to_string(alphabet.size()) + " probabilities");
    s.kind = "list";
    for (std::size_t i = 0; i < v->size(); ++i) s.weights.push_back(as_number((*v)[i], child(path, i)));
    at_field(path, [&] { return Distribution(alphabet.space(), s.weights); });
    return s;
  }
  const std::string text = v ? as_string(*v, path) : fallback;
  const auto colon = text.find(':');
  s.kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if ((s.kind == "q" || s.kind == "uniform") && colon == std::string::npos) return s;
  if (s.kind == "point" && !arg.empty()) {
    const bool numeric = arg.find_first_not_of("0123456789") == std::string::npos;
    if (numeric && alphabet.n() > 1) {
      s.point = std::stoull(arg);
      at_field(path, [&] { alphabet.space().check_index(s.point); });
    } else {
      s.point = at_field(path, [&] { return alphabet.parse_genome(arg); });
    }
    return s;
  }
  if (s.kind == "random" && !arg.empty() && arg.find_first_not_of("0123456789") == std::string::npos) {
    s.seed = std::stoull(arg);
    return s;
  }
  throw ConfigError(path, "expected \"q\", \"uniform\", \"point:<genome>\", \"random:<seed>\" or a probability list");
}

inline json initial_json(const InitialSpec& s, const AlphabetSpec& alphabet) {
  if (s.kind == "list") return s.weights;
  if (s.kind == "point") return "point:" + alphabet.format_genome(s.point);
  if (s.kind == "random") return "random:" + std::to_string(s.seed);
  return s.kind;
}

/// Parses "intervals:a..b".
inline std::pair<int, int> interval_range(const std::string& text, int n, const std::string& path) {
  const std::string body = text.substr(std::string("intervals:").size());
  const auto dots = body.find("..");
  try {
    if (dots == std::string::npos) throw std::invalid_argument("");
    std::size_t used_a = 0, used_b = 0;
    const int a = std::stoi(body.substr(0, dots), &used_a);
    const int b = std::stoi(body.substr(dots + 2), &used_b);
    if (used_a != dots || used_b != body.size() - dots - 2) throw std::invalid_argument("");
    if (a < 1 || b < a || b > n) throw ConfigError(path, "interval lengths must satisfy 1 <= min <= max <= n");
    return {a, b};
  } catch (const std::logic_error&) {
    throw ConfigError(path, "expected \"intervals:<min>..<max>\"");
  }
}

}  // namespace detail

/// Builds the typed configuration. Every default is written into `resolved`.
inline ExperimentConfig resolve(const json& doc) {
  using namespace detail;
  ExperimentConfig cfg;
  Section root(doc, "");
  json& out = cfg.resolved;

  cfg.seed = root.count("seed", 1);
  cfg.output_dir = root.string("output_dir", "out");
  out["seed"] = cfg.seed;
  out["output_dir"] = cfg.output_dir;

  {
    Section s(doc, "alphabet", "");
    const auto k = s.count("k", 2);
    const auto n = s.count("n", 3);
    if (k < 2) throw ConfigError(s.field("k"), "alphabet needs at least 2 symbols");
    if (n < 1 || n > static_cast<std::uint64_t>(kMaxGenomeLength))
      throw ConfigError(s.field("n"), "genome length must be in 1.." + std::to_string(kMaxGenomeLength));
    if (const auto* sym = s.find("symbols")) {
      if (!sym->is_array()) throw ConfigError(s.field("symbols"), "expected a list of labels");
      std::vector<std::string> labels;
      for (std::size_t i = 0; i < sym->size(); ++i)
        labels.push_back(as_string((*sym)[i], child(s.field("symbols"), i)));
      cfg.alphabet = at_field(s.field("symbols"), [&] { return AlphabetSpec(k, static_cast<int>(n), labels); });
    } else {
      cfg.alphabet = at_field(s.path(), [&] { return AlphabetSpec(k, static_cast<int>(n)); });
    }
    s.finish();
    // Guard the dense tables against absurd sizes before anything is allocated.
    if (cfg.alphabet.size() > (std::size_t{1} << 24))
      throw ConfigError(s.path(), "k^n exceeds 2^24 genomes");
    out["alphabet"] = {{"k", k}, {"n", n}, {"symbols", cfg.alphabet.symbols()}};
  }
  const auto& alphabet = cfg.alphabet;
  const auto k = alphabet.k();
  const int n = alphabet.n();

  {
    Section s(doc, "mutation", "");
    const auto model = s.string("model", "random");
    json echo;
    echo["model"] = model;
    if (model == "random") {
      const double lo = s.number("low", 0.1);
      const double hi = s.number("high", 2.0);
      if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError(s.field("low"), "need 0 < low <= high");
      const auto seed = s.count("seed", cfg.seed);
      Rng rng(seed);
      for (int i = 0; i < n; ++i) cfg.sites.push_back(random_rate_matrix(k, rng, lo, hi));
      echo["low"] = lo;
      echo["high"] = hi;
      echo["seed"] = seed;
    } else if (model == "replicated") {
      const auto* rates = s.find("rates");
      if (!rates) throw ConfigError(s.field("rates"), "missing k x k rate matrix");
      const auto alpha = at_field(s.field("rates"), [&] { return site_matrix(read_matrix(*rates, k, s.field("rates"))); });
      cfg.sites.assign(static_cast<std::size_t>(n), alpha);
    } else if (model == "per_site") {
      const auto* rates = s.find("rates");
      if (!rates || !rates->is_array() || rates->size() != static_cast<std::size_t>(n))
        throw ConfigError(s.field("rates"), "expected one k x k matrix per site (" + std::to_string(n) + ")");
      for (int i = 0; i < n; ++i) {
        const auto p = child(s.field("rates"), static_cast<std::size_t>(i));
        cfg.sites.push_back(at_field(p, [&] { return site_matrix(read_matrix((*rates)[static_cast<std::size_t>(i)], k, p)); }));
      }
    } else {
      throw ConfigError(s.field("model"), "expected \"random\", \"replicated\" or \"per_site\"");
    }
    s.finish();
    json per_site = json::array();
    for (const auto& m : cfg.sites) per_site.push_back(matrix_json(m));
    echo["rates"] = std::move(per_site);
    out["mutation"] = std::move(echo);
  }

  {
    Section s(doc, "recombination", "");
    cfg.kappa = s.number("kappa", 1.0);
    if (!(cfg.kappa >= 0.0) || !std::isfinite(cfg.kappa)) throw ConfigError(s.field("kappa"), "kappa must be >= 0");
    json echo;
    echo["kappa"] = cfg.kappa;

    std::vector<SubsetMask> masks;
    const auto* fam = s.find("family");
    const auto fpath = s.field("family");
    if (fam == nullptr || fam->is_string()) {
      const std::string text = fam ? fam->get<std::string>() : "intervals:1.." + std::to_string(n);
      if (text == "all-subsets") {
        if (n > kMaxAllSubsetsLength) throw ConfigError(fpath, "all-subsets needs n <= " + std::to_string(kMaxAllSubsetsLength));
        for (const auto& m : all_subsets_family(n)) masks.push_back(m.mask);
      } else if (text.rfind("intervals:", 0) == 0) {
        const auto [a, b] = interval_range(text, n, fpath);
        for (const auto& m : interval_family(n, a, b)) masks.push_back(m.mask);
      } else {
        throw ConfigError(fpath, "expected \"intervals:<min>..<max>\", \"all-subsets\" or a list of position lists");
      }
      echo["family"] = text;
    } else if (fam->is_array()) {
      for (std::size_t i = 0; i < fam->size(); ++i) {
        const auto mp = child(fpath, i);
        const auto& item = (*fam)[i];
        if (!item.is_array()) throw ConfigError(mp, "expected a list of site positions");
        std::vector<int> positions;
        for (std::size_t j = 0; j < item.size(); ++j) {
          const auto pos = as_count(item[j], child(mp, j));
          if (pos >= static_cast<std::uint64_t>(n)) throw ConfigError(child(mp, j), "position out of range");
          positions.push_back(static_cast<int>(pos));
        }
        masks.push_back(at_field(mp, [&] { return SubsetMask::from_positions(positions, n); }));
      }
      json lists = json::array();
      for (const auto& m : masks) lists.push_back(m.positions());
      echo["family"] = std::move(lists);
    } else {
      throw ConfigError(fpath, "expected a descriptor string or a list of masks");
    }

    std::vector<double> weights(masks.size(), 1.0);
    if (const auto* w = s.find("weights")) {
      if (!w->is_array() || w->size() != masks.size())
        throw ConfigError(s.field("weights"), "expected " + std::to_string(masks.size()) + " weights");
      for (std::size_t i = 0; i < masks.size(); ++i) weights[i] = as_number((*w)[i], child(s.field("weights"), i));
    }
    for (std::size_t i = 0; i < masks.size(); ++i) cfg.family.push_back({masks[i], weights[i]});
    echo["weights"] = weights;

    const bool allow_asym = s.boolean("allow_asymmetric", false);
    {
      const json none = json::object();
      const auto* sim_node = s.find("similarity");
      Section sim(sim_node ? doc.at("recombination") : none, "similarity", s.path());
      const auto kind = sim.string("kind", "exponential");
      json se;
      se["kind"] = kind;
      if (kind == "exponential") {
        const double lambda = sim.number("lambda", 1.0);
        cfg.similarity = at_field(sim.field("lambda"), [&] { return SimilaritySpec::exponential(lambda); });
        se["lambda"] = lambda;
      } else if (kind == "constant") {
        const double c = sim.number("value", 1.0);
        cfg.similarity = at_field(sim.field("value"), [&] { return SimilaritySpec::constant(c); });
        se["value"] = c;
      } else if (kind == "table") {
        const auto* entries = sim.find("entries");
        const auto ep = sim.field("entries");
        if (!entries || !entries->is_array()) throw ConfigError(ep, "expected a list of {a, b, value} entries");
        std::vector<SimilaritySpec::Entry> table;
        json te = json::array();
        for (std::size_t i = 0; i < entries->size(); ++i) {
          const auto ip = child(ep, i);
          const auto& e = (*entries)[i];
          Section es(e, ip);
          const auto a = es.string("a", "");
          const auto b = es.string("b", "");
          const double value = es.number("value", std::numeric_limits<double>::quiet_NaN());
          es.finish();
          if (a.empty() || b.empty()) throw ConfigError(ip, "entries need non-empty substrings a and b");
          if (std::isnan(value)) throw ConfigError(es.field("value"), "missing value");
          // Substring length is taken from a; b must match it.
          const auto da = at_field(es.field("a"), [&] { return alphabet.parse_symbols(a); });
          if (da.size() > static_cast<std::size_t>(n)) throw ConfigError(es.field("a"), "substring longer than the genome");
          const int len = static_cast<int>(da.size());
          const auto db = at_field(es.field("b"), [&] { return alphabet.parse_word(b, len); });
          const Space sub(k, len);
          table.push_back({len, sub.encode(da), sub.encode(db), value});
          te.push_back({{"a", a}, {"b", b}, {"value", value}});
        }
        cfg.similarity = at_field(ep, [&] { return SimilaritySpec::table(table, allow_asym); });
        se["entries"] = std::move(te);
      } else {
        throw ConfigError(sim.field("kind"), "expected \"exponential\", \"constant\" or \"table\"");
      }
      sim.finish();
      echo["similarity"] = std::move(se);
    }
    echo["allow_asymmetric"] = allow_asym;

    std::vector<KappaStep> schedule;
    if (const auto* sch = s.find("kappa_schedule")) {
      const auto sp = s.field("kappa_schedule");
      if (!sch->is_array()) throw ConfigError(sp, "expected a list of {start, kappa} steps");
      for (std::size_t i = 0; i < sch->size(); ++i) {
        Section step((*sch)[i], child(sp, i));
        KappaStep ks;
        ks.start = step.number("start", 0.0);
        ks.kappa = step.number("kappa", cfg.kappa);
        step.finish();
        schedule.push_back(ks);
      }
    }
    json sch_echo = json::array();
    for (const auto& st : schedule) sch_echo.push_back({{"start", st.start}, {"kappa", st.kappa}});
    echo["kappa_schedule"] = std::move(sch_echo);
    cfg.integrator.kappa_schedule = std::move(schedule);
    s.finish();
    // Family and weight checks live in the model constructor.
    at_field(s.path(), [&] { (void)cfg.recombination_model(); });
    out["recombination"] = std::move(echo);
  }

  {
    Section s(doc, "integrator", "");
    auto& ic = cfg.integrator;
    ic.dt = s.number("dt", 1e-3);
    ic.t_max = s.number("t_max", 10.0);
    ic.record_every = s.count("record_every", 100);
    ic.fixed_point_eps = s.number("fixed_point_eps", 1e-10);
    ic.renorm_tol = s.number("renorm_tol", kNormTolerance);
    cfg.integrator_initial = read_initial(s.find("initial"), s.field("initial"), alphabet, "uniform");
    s.finish();
    at_field(s.path(), [&] { ic.validate(); });
    out["integrator"] = {{"dt", ic.dt},
                         {"t_max", ic.t_max},
                         {"record_every", ic.record_every},
                         {"fixed_point_eps", ic.fixed_point_eps},
                         {"renorm_tol", ic.renorm_tol},
                         {"initial", initial_json(cfg.integrator_initial, alphabet)}};
  }

  {
    Section s(doc, "simulation", "");
    auto& ss = cfg.simulation;
    ss.population = s.count("population", 1000);
    if (ss.population < 1) throw ConfigError(s.field("population"), "population must be at least 1");
    const auto mode = s.string("mode", "I");
    if (mode == "I") {
      ss.sim.mode = RecombinationMode::substring_copy;
    } else if (mode == "I/I") {
      ss.sim.mode = RecombinationMode::pair_exchange;
    } else {
      throw ConfigError(s.field("mode"), "expected \"I\" or \"I/I\"");
    }
    ss.sim.seed = s.count("seed", cfg.seed);
    ss.sim.t_max = s.number("t_max", 50.0);
    ss.sim.burn_in = s.number("burn_in", 10.0);
    ss.sim.sample_every = s.number("sample_every", 0.5);
    ss.sim.replicate_count = s.count("replicates", 1);
    const auto bk = s.string("bookkeeping", "incremental");
    if (bk == "incremental") {
      ss.sim.bookkeeping = RateBookkeeping::incremental;
    } else if (bk == "scratch") {
      ss.sim.bookkeeping = RateBookkeeping::scratch;
    } else {
      throw ConfigError(s.field("bookkeeping"), "expected \"incremental\" or \"scratch\"");
    }
    ss.initial = read_initial(s.find("initial"), s.field("initial"), alphabet, "point:0");
    s.finish();
    at_field(s.path(), [&] { ss.sim.validate(); });
    out["simulation"] = {{"population", ss.population},
                         {"mode", mode},
                         {"seed", ss.sim.seed},
                         {"t_max", ss.sim.t_max},
                         {"burn_in", ss.sim.burn_in},
                         {"sample_every", ss.sim.sample_every},
                         {"replicates", ss.sim.replicate_count},
                         {"bookkeeping", bk},
                         {"initial", initial_json(ss.initial, alphabet)}};
  }

  {
    Section s(doc, "verify", "");
    auto& v = cfg.verify;
    v.contraction = s.count("contraction", 100);
    v.entropy_chain = s.count("entropy_chain", 100);
    v.entropy_rate = s.count("entropy_rate", 100);
    v.max_chain_size = s.count("max_chain_size", 16);
    v.dt = s.number("dt", 0.05);
    v.fd_step = s.number("fd_step", 0.0);
    v.fd_tolerance = s.number("fd_tolerance", 1e-6);
    s.finish();
    if (v.max_chain_size < 2) throw ConfigError(s.field("max_chain_size"), "must be at least 2");
    if (!(v.dt > 0.0)) throw ConfigError(s.field("dt"), "must be positive");
    if (!(v.fd_step >= 0.0)) throw ConfigError(s.field("fd_step"), "must be >= 0 (0 selects the step automatically)");
    out["verify"] = {{"contraction", v.contraction},
                     {"entropy_chain", v.entropy_chain},
                     {"entropy_rate", v.entropy_rate},
                     {"max_chain_size", v.max_chain_size},
                     {"dt", v.dt},
                     {"fd_step", v.fd_step},
                     {"fd_tolerance", v.fd_tolerance}};
  }

  for (const auto* name : {"alphabet", "mutation", "recombination", "integrator", "simulation", "verify"})
    root.find(name);
  root.finish();
  return cfg;
}

/// Parses JSON text; syntax errors report line and column.
inline json parse(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ValidationError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": invalid JSON");
  }
}

/// Applies "a.b.c=value". The value is read as JSON when it parses, otherwise
/// as a plain string, so `--override simulation.mode=I/I` works unquoted.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ValidationError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ValidationError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

/// Starting law for the integrator.
inline Distribution initial_law(const InitialSpec& s, const AlphabetSpec& alphabet, const MutationModel& mut) {
  const auto& space = alphabet.space();
  if (s.kind == "q") return mut.q_lambda();
  if (s.kind == "uniform") return Distribution::uniform(space);
  if (s.kind == "point") return Distribution::point_mass(space, s.point);
  if (s.kind == "random") {
    Rng rng(s.seed);
    return random_distribution(space, rng);
  }
  return Distribution(space, s.weights);
}

/// Starting population: monomorphic for a point, otherwise N draws from the law.
inline PopulationState initial_population(const InitialSpec& s, std::uint64_t population, const AlphabetSpec& alphabet,
                                          const MutationModel& mut, std::uint64_t seed) {
  if (s.kind == "point") return PopulationState::monomorphic(alphabet.space(), s.point, population);
  Rng rng(seed, 0x5eed);
  return PopulationState::sample(initial_law(s, alphabet, mut), population, rng);
}

}  // namespace recomb::config
