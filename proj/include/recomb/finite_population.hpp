#pragma once

// Event-driven simulation of a finite population of N genomes under mutation
// and similarity-dependent recombination.
//
// Every ordered pair of individuals (u, v) and family member I carries
// recombination intensity kappa * w_I * phi(u_I, v_I) / N. In I-mode the pair
// replaces u's I-substring by v's (v unchanged) and self-pairs u = v are
// included as no-op events, so a receiver draws its donor substring from the
// current empirical marginal. In pair-exchange (I/I) mode u and v swap their
// I-substrings and only distinct individuals pair up.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "recomb/error.hpp"
#include "recomb/mutation_model.hpp"
#include "recomb/random.hpp"
#include "recomb/recombination_model.hpp"
#include "recomb/state_space.hpp"

namespace recomb {

enum class RecombinationMode { substring_copy, pair_exchange };

inline std::string to_string(RecombinationMode mode) {
  return mode == RecombinationMode::substring_copy ? "I" : "I/I";
}

/// How the simulator keeps its per-event rate tables up to date.
enum class RateBookkeeping { incremental, scratch };

/// N genomes stored as a count per genome index.
class PopulationState {
 public:
  PopulationState() = default;

  PopulationState(Space space, std::vector<std::uint64_t> counts, double t = 0.0)
      : space_(std::move(space)), counts_(std::move(counts)), t_(t) {
    if (counts_.size() != space_.size()) throw ValidationError("count table has the wrong size");
    for (auto c : counts_) n_ += c;
    if (n_ < 1) throw ValidationError("population must contain at least one genome");
  }

  static PopulationState monomorphic(const Space& space, GenomeIndex x, std::uint64_t n) {
    space.check_index(x);
    std::vector<std::uint64_t> counts(space.size(), 0);
    counts[x] = n;
    return PopulationState(space, std::move(counts));
  }

  /// N independent draws from `law`.
  static PopulationState sample(const Distribution& law, std::uint64_t n, Rng& rng) {
    std::vector<std::uint64_t> counts(law.size(), 0);
    for (std::uint64_t i = 0; i < n; ++i) {
      double r = rng.uniform();
      GenomeIndex x = 0;
      for (; x + 1 < law.size(); ++x) {
        if (r < law[x]) break;
        r -= law[x];
      }
      ++counts[x];
    }
    return PopulationState(law.space(), std::move(counts));
  }

  const Space& space() const { return space_; }
  std::uint64_t size() const { return n_; }
  std::uint64_t count(GenomeIndex x) const { return counts_[x]; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  double time() const { return t_; }

  void set_time(double t) { t_ = t; }

  /// Moves one individual from genome `from` to genome `to`.
  void move(GenomeIndex from, GenomeIndex to) {
    assert(counts_[from] > 0);
    --counts_[from];
    ++counts_[to];
  }

  /// Expands the count table into one genome index per individual.
  std::vector<GenomeIndex> individuals() const {
    std::vector<GenomeIndex> out;
    out.reserve(n_);
    for (GenomeIndex x = 0; x < counts_.size(); ++x) out.insert(out.end(), counts_[x], x);
    return out;
  }

  friend bool operator==(const PopulationState& a, const PopulationState& b) {
    return a.space_ == b.space_ && a.counts_ == b.counts_ && a.t_ == b.t_;
  }

 private:
  Space space_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t n_ = 0;
  double t_ = 0.0;
};

/// f_N(x) = count(x) / N.
inline Distribution empirical_distribution(const PopulationState& state) {
  std::vector<double> f(state.counts().size());
  const auto n = static_cast<double>(state.size());
  for (GenomeIndex x = 0; x < f.size(); ++x) f[x] = static_cast<double>(state.count(x)) / n;
  return Distribution(state.space(), std::move(f));
}

struct SimConfig {
  std::uint64_t seed = 1;
  double t_max = 10.0;
  RecombinationMode mode = RecombinationMode::substring_copy;
  double burn_in = 0.0;
  double sample_every = 1.0;
  std::size_t replicate_count = 1;
  RateBookkeeping bookkeeping = RateBookkeeping::incremental;

  void validate() const {
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ValidationError("simulation t_max must be positive");
    if (!(burn_in >= 0.0) || burn_in > t_max) throw ValidationError("burn_in must lie in [0, t_max]");
    if (!(sample_every > 0.0)) throw ValidationError("sample_every must be positive");
    if (replicate_count < 1) throw ValidationError("replicate_count must be at least 1");
  }
};

struct RateSummary {
  double mutation = 0.0;
  double recombination = 0.0;
  std::vector<double> per_member;  // recombination intensity of each family member

  double total() const { return mutation + recombination; }
};

/// Reference rate summary by direct enumeration of individuals and ordered
/// pairs: O(N^2 * |family|).
inline RateSummary event_rates(const PopulationState& state, const MutationModel& mut, const RecombinationModel& rec,
                               RecombinationMode mode) {
  if (!(state.space() == mut.space()) || !(state.space() == rec.space()))
    throw ValidationError("population and models live on different spaces");
  const auto& space = state.space();
  const auto people = state.individuals();
  const auto n = static_cast<double>(people.size());
  RateSummary s;
  for (auto x : people)
    for (int pos = 0; pos < space.length(); ++pos)
      for (std::size_t b = 0; b < space.k(); ++b)
        if (static_cast<int>(b) != space.digit(x, pos))
          s.mutation += mut.site(pos)(static_cast<std::size_t>(space.digit(x, pos)), b);
  s.per_member.assign(rec.family().size(), 0.0);
  for (std::size_t j = 0; j < rec.family().size(); ++j) {
    const auto& member = rec.family()[j];
    const SubsetIndexer ix(space, member.mask);
    double sum = 0.0;
    for (std::size_t u = 0; u < people.size(); ++u) {
      for (std::size_t v = 0; v < people.size(); ++v) {
        if (u == v && mode == RecombinationMode::pair_exchange) continue;
        sum += rec.similarity()(ix.sub_index(people[u]), ix.sub_index(people[v]), ix.sub_space());
      }
    }
    s.per_member[j] = rec.kappa() * member.weight * sum / n;
    s.recombination += s.per_member[j];
  }
  return s;
}

enum class EventKind { none, mutation, recombination };

struct Event {
  EventKind kind = EventKind::none;
  std::size_t member = 0;        // family member (recombination)
  GenomeIndex receiver = 0;      // genome before the event (mutant or receiver)
  GenomeIndex receiver_after = 0;
  GenomeIndex partner = 0;       // donor / exchange partner genome
  GenomeIndex partner_after = 0; // differs from partner only in I/I mode
  bool changed = false;
};

struct StepResult {
  Event event;
  double elapsed = std::numeric_limits<double>::infinity();
};

/// Gillespie simulator over the count table. Rate tables are kept per family
/// member on substring classes: for substring a, the receiver weight is
/// c_I(a) * sum_b phi(a, b) c_I(b), minus the self-pairs in I/I mode.
class PopulationSimulator {
 public:
  PopulationSimulator(PopulationState state, const MutationModel& mut, const RecombinationModel& rec,
                      RecombinationMode mode, RateBookkeeping bookkeeping, Rng rng)
      : state_(std::move(state)), mut_(&mut), rec_(&rec), mode_(mode), bookkeeping_(bookkeeping),
        rng_(std::move(rng)) {
    if (!(state_.space() == mut.space()) || !(state_.space() == rec.space()))
      throw ValidationError("population and models live on different spaces");
    for (std::size_t j = 0; j < rec.family().size(); ++j) {
      const auto& member = rec.family()[j];
      Member m{SubsetIndexer(state_.space(), member.mask), {}, {}, {}, rec.kappa() * member.weight, 0.0};
      const auto& sub = m.indexer.sub_space();
      m.phi = rec.dense_phi(sub);
      m.class_count.assign(sub.size(), 0);
      m.affinity.assign(sub.size(), 0.0);
      members_.push_back(std::move(m));
    }
    rebuild();
  }

  const PopulationState& state() const { return state_; }
  std::uint64_t events() const { return events_; }

  RateSummary rates() const {
    RateSummary s;
    s.mutation = mutation_total_;
    for (const auto& m : members_) {
      s.per_member.push_back(m.total);
      s.recombination += m.total;
    }
    return s;
  }

  /// Draws the waiting time to the next event (+inf if no event can occur).
  /// The state is unchanged until fire() is called.
  double draw_waiting_time() {
    if (bookkeeping_ == RateBookkeeping::scratch || events_ % kRefreshEvery == 0) rebuild();
    pending_total_ = total_rate();
    pending_ = pending_total_ > 0.0 ? rng_.exponential(pending_total_) : std::numeric_limits<double>::infinity();
    return pending_;
  }

  /// Applies the event whose waiting time was drawn last and advances time.
  StepResult fire() {
    StepResult out;
    out.elapsed = pending_;
    if (!std::isfinite(pending_)) return out;
    double r = rng_.uniform() * pending_total_;
    if (r < mutation_total_ || members_.empty()) {
      out.event = mutate(std::min(r, mutation_total_));
    } else {
      r -= mutation_total_;
      std::size_t j = 0;
      for (; j + 1 < members_.size(); ++j) {
        if (r < members_[j].total) break;
        r -= members_[j].total;
      }
      out.event = recombine(j);
    }
    state_.set_time(state_.time() + pending_);
    pending_ = std::numeric_limits<double>::infinity();
    ++events_;
    return out;
  }

  StepResult step() {
    draw_waiting_time();
    return fire();
  }

 private:
  static constexpr std::uint64_t kRefreshEvery = 1 << 16;

  struct Member {
    SubsetIndexer indexer;
    std::vector<double> phi;                // dense phi on the sub-space
    std::vector<std::int64_t> class_count;  // c_I(a)
    std::vector<double> affinity;           // sum_b phi(a, b) c_I(b)
    double rate = 0.0;                      // kappa * w_I
    double total = 0.0;                     // member intensity
  };

  double total_rate() const {
    double s = mutation_total_;
    for (const auto& m : members_) s += m.total;
    return s;
  }

  double receiver_weight(const Member& m, std::size_t a) const {
    const auto ca = static_cast<double>(m.class_count[a]);
    double w = ca * m.affinity[a];
    if (mode_ == RecombinationMode::pair_exchange) w -= ca * m.phi[a * m.class_count.size() + a];
    return std::max(w, 0.0);
  }

  void refresh_member_total(Member& m) {
    double s = 0.0;
    for (std::size_t a = 0; a < m.class_count.size(); ++a) s += receiver_weight(m, a);
    m.total = m.rate * s / static_cast<double>(state_.size());
  }

  void rebuild() {
    const auto& counts = state_.counts();
    mutation_total_ = 0.0;
    for (GenomeIndex x = 0; x < counts.size(); ++x)
      mutation_total_ += static_cast<double>(counts[x]) * mut_->exit_rate(x);
    for (auto& m : members_) {
      std::fill(m.class_count.begin(), m.class_count.end(), 0);
      for (GenomeIndex x = 0; x < counts.size(); ++x)
        m.class_count[m.indexer.sub_index(x)] += static_cast<std::int64_t>(counts[x]);
      const auto s = m.class_count.size();
      for (std::size_t a = 0; a < s; ++a) {
        double v = 0.0;
        for (std::size_t b = 0; b < s; ++b) v += m.phi[a * s + b] * static_cast<double>(m.class_count[b]);
        m.affinity[a] = v;
      }
      refresh_member_total(m);
    }
  }

  /// Count of genome x changes by delta (+1 or -1).
  void update(GenomeIndex x, int delta) {
    mutation_total_ += delta * mut_->exit_rate(x);
    if (bookkeeping_ == RateBookkeeping::scratch) return;
    for (auto& m : members_) {
      const auto a = m.indexer.sub_index(x);
      const auto s = m.class_count.size();
      m.class_count[a] += delta;
      for (std::size_t b = 0; b < s; ++b) m.affinity[b] += delta * m.phi[b * s + a];
    }
  }

  void relocate(GenomeIndex from, GenomeIndex to) {
    if (from == to) return;
    state_.move(from, to);
    update(from, -1);
    update(to, +1);
  }

  void finish_update() {
    if (bookkeeping_ == RateBookkeeping::scratch) {
      rebuild();
      return;
    }
    for (auto& m : members_) refresh_member_total(m);
  }

  Event mutate(double r) {
    const auto& space = state_.space();
    const auto& counts = state_.counts();
    GenomeIndex x = 0;
    GenomeIndex last = 0;
    for (; x < counts.size(); ++x) {
      const double w = static_cast<double>(counts[x]) * mut_->exit_rate(x);
      if (w <= 0.0) continue;
      last = x;
      if (r < w) break;
      r -= w;
    }
    if (x == counts.size()) x = last;
    // Site and target letter proportional to the site intensities.
    double u = rng_.uniform() * mut_->exit_rate(x);
    int site = 0;
    std::size_t target = 0;
    bool found = false;
    for (int pos = 0; pos < space.length() && !found; ++pos) {
      const auto a = static_cast<std::size_t>(space.digit(x, pos));
      for (std::size_t b = 0; b < space.k(); ++b) {
        if (b == a) continue;
        const double w = mut_->site(pos)(a, b);
        if (w <= 0.0) continue;
        site = pos;
        target = b;
        if (u < w) {
          found = true;
          break;
        }
        u -= w;
      }
    }
    const auto y = space.with_digit(x, site, static_cast<int>(target));
    relocate(x, y);
    finish_update();
    Event e;
    e.kind = EventKind::mutation;
    e.receiver = x;
    e.receiver_after = y;
    e.changed = true;
    return e;
  }

  /// Picks a genome with sub-index `a` for member m, weighted by its count
  /// minus `exclude_one` copies of genome `excluded`.
  GenomeIndex pick_in_class(const Member& m, std::size_t a, GenomeIndex excluded, bool exclude_one) {
    const auto& ix = m.indexer;
    double total = static_cast<double>(m.class_count[a]) - (exclude_one ? 1.0 : 0.0);
    double r = rng_.uniform() * total;
    GenomeIndex last = ix.genome(0, a);
    for (std::size_t c = 0; c < ix.comp_size(); ++c) {
      const auto x = ix.genome(c, a);
      double w = static_cast<double>(state_.count(x));
      if (exclude_one && x == excluded) w -= 1.0;
      if (w <= 0.0) continue;
      last = x;
      if (r < w) return x;
      r -= w;
    }
    return last;
  }

  Event recombine(std::size_t j) {
    const auto& m = members_[j];
    const auto s = m.class_count.size();
    const bool exchange = mode_ == RecombinationMode::pair_exchange;

    double total = 0.0;
    for (std::size_t a = 0; a < s; ++a) total += receiver_weight(m, a);
    double r = rng_.uniform() * total;
    std::size_t a = 0;
    std::size_t last_a = 0;
    for (; a < s; ++a) {
      const double w = receiver_weight(m, a);
      if (w <= 0.0) continue;
      last_a = a;
      if (r < w) break;
      r -= w;
    }
    if (a == s) a = last_a;
    const auto x = pick_in_class(m, a, 0, false);

    // Donor substring b with weight phi(a, b) * (c_I(b) - [self excluded]).
    double donor_total = 0.0;
    for (std::size_t b = 0; b < s; ++b)
      donor_total += m.phi[a * s + b] * (static_cast<double>(m.class_count[b]) - (exchange && b == a ? 1.0 : 0.0));
    double u = rng_.uniform() * donor_total;
    std::size_t b = 0;
    std::size_t last_b = a;
    for (; b < s; ++b) {
      const double w =
          m.phi[a * s + b] * (static_cast<double>(m.class_count[b]) - (exchange && b == a ? 1.0 : 0.0));
      if (w <= 0.0) continue;
      last_b = b;
      if (u < w) break;
      u -= w;
    }
    if (b == s) b = last_b;
    const auto y = pick_in_class(m, b, x, exchange && b == a);

    Event e;
    e.kind = EventKind::recombination;
    e.member = j;
    e.receiver = x;
    e.partner = y;
    e.receiver_after = m.indexer.splice(x, y);
    e.partner_after = exchange ? m.indexer.splice(y, x) : y;
    e.changed = e.receiver_after != x;
    // Remove both originals before adding results so the pair is consistent.
    if (e.changed) {
      relocate(x, e.receiver_after);
      if (exchange) relocate(y, e.partner_after);
      finish_update();
    }
    return e;
  }

  PopulationState state_;
  const MutationModel* mut_;
  const RecombinationModel* rec_;
  RecombinationMode mode_;
  RateBookkeeping bookkeeping_;
  Rng rng_;
  std::vector<Member> members_;
  double mutation_total_ = 0.0;
  double pending_ = std::numeric_limits<double>::infinity();
  double pending_total_ = 0.0;
  std::uint64_t events_ = 0;
};

/// One event from `state`; returns the new state and the elapsed time
/// (elapsed = +inf and state unchanged when no event can occur).
inline std::pair<PopulationState, StepResult> step(const PopulationState& state, const MutationModel& mut,
                                                   const RecombinationModel& rec, Rng& rng,
                                                   RecombinationMode mode = RecombinationMode::substring_copy) {
  PopulationSimulator sim(state, mut, rec, mode, RateBookkeeping::scratch, Rng(rng.next()));
  auto result = sim.step();
  return {sim.state(), result};
}

struct SimulationResult {
  std::vector<PopulationState> samples;
  PopulationState final_state;
  std::uint64_t mutation_events = 0;
  std::uint64_t recombination_events = 0;
  std::uint64_t effective_recombinations = 0;
};

/// Runs one trajectory to cfg.t_max and records the state at times
/// burn_in + j * sample_every (j >= 1) up to t_max.
inline SimulationResult simulate(const PopulationState& state0, const MutationModel& mut,
                                 const RecombinationModel& rec, const SimConfig& cfg, Rng rng) {
  cfg.validate();
  PopulationSimulator sim(state0, mut, rec, cfg.mode, cfg.bookkeeping, std::move(rng));
  SimulationResult out;
  std::size_t next_sample = 1;
  const auto sample_time = [&](std::size_t j) { return cfg.burn_in + static_cast<double>(j) * cfg.sample_every; };
  // Guard against accumulating 1 ulp past t_max on the last sample.
  const double horizon = cfg.t_max * (1.0 + 1e-12);

  while (true) {
    const double now = sim.state().time();
    const double until = now + sim.draw_waiting_time();
    // The state is constant on [now, until).
    while (sample_time(next_sample) <= horizon && sample_time(next_sample) < until) {
      out.samples.push_back(sim.state());
      out.samples.back().set_time(sample_time(next_sample));
      ++next_sample;
    }
    if (until > cfg.t_max) {
      out.final_state = sim.state();
      out.final_state.set_time(cfg.t_max);
      break;
    }
    const auto res = sim.fire();
    if (res.event.kind == EventKind::mutation) ++out.mutation_events;
    if (res.event.kind == EventKind::recombination) {
      ++out.recombination_events;
      if (res.event.changed) ++out.effective_recombinations;
    }
  }
  return out;
}

inline SimulationResult simulate(const PopulationState& state0, const MutationModel& mut,
                                 const RecombinationModel& rec, const SimConfig& cfg) {
  return simulate(state0, mut, rec, cfg, Rng::stream(cfg.seed, 0));
}

/// Runs cfg.replicate_count independent trajectories, replicate r on stream r
/// of cfg.seed, spread over the available hardware threads.
inline std::vector<SimulationResult> simulate_replicates(const PopulationState& state0, const MutationModel& mut,
                                                         const RecombinationModel& rec, const SimConfig& cfg) {
  cfg.validate();
  std::vector<SimulationResult> results(cfg.replicate_count);
  const std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  for (std::size_t first = 0; first < cfg.replicate_count; first += workers) {
    std::vector<std::future<void>> batch;
    for (std::size_t r = first; r < std::min(cfg.replicate_count, first + workers); ++r) {
      batch.push_back(std::async(std::launch::async, [&, r] {
        results[r] = simulate(state0, mut, rec, cfg, Rng::stream(cfg.seed, r));
      }));
    }
    for (auto& f : batch) f.get();
  }
  return results;
}

/// Mean of f_N over the recorded samples.
inline Distribution time_averaged_law(const std::vector<PopulationState>& samples) {
  if (samples.empty()) throw PreconditionError("no samples to average");
  std::vector<double> acc(samples.front().space().size(), 0.0);
  for (const auto& s : samples) {
    const auto n = static_cast<double>(s.size());
    for (GenomeIndex x = 0; x < acc.size(); ++x) acc[x] += static_cast<double>(s.count(x)) / n;
  }
  for (double& v : acc) v /= static_cast<double>(samples.size());
  return Distribution::from_weights(samples.front().space(), std::move(acc));
}

}  // namespace recomb
