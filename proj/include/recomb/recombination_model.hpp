#pragma once

// Similarity-dependent homologous recombination: the similarity function, the
// weighted family of recombining position sets, the nonlinear part of the
// kinetic equation and the single-subset transition kernel.

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "recomb/error.hpp"
#include "recomb/state_space.hpp"
#include "recomb/stochastic_matrix.hpp"

namespace recomb {

/// phi(x_I, y_I): non-negative similarity weight on pairs of substrings.
class SimilaritySpec {
 public:
  enum class Kind { constant, exponential_decay, table };

  /// Explicit entry for substrings a, b of length `length` (sub-indices in K^length).
  struct Entry {
    int length;
    std::size_t a;
    std::size_t b;
    double value;
  };

  static SimilaritySpec constant(double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("constant similarity must be finite and >= 0");
    SimilaritySpec s;
    s.kind_ = Kind::constant;
    s.value_ = c;
    return s;
  }

  /// phi = exp(-lambda * Hamming distance of the substrings).
  static SimilaritySpec exponential(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("decay rate must be finite and >= 0");
    SimilaritySpec s;
    s.kind_ = Kind::exponential_decay;
    s.value_ = lambda;
    return s;
  }

  static SimilaritySpec table(const std::vector<Entry>& entries, bool allow_asymmetric = false) {
    SimilaritySpec s;
    s.kind_ = Kind::table;
    s.allow_asymmetric_ = allow_asymmetric;
    for (const auto& e : entries) {
      if (!(e.value >= 0.0) || !std::isfinite(e.value))
        throw ValidationError("similarity values must be finite and >= 0");
      if (!s.table_.emplace(std::tuple{e.length, e.a, e.b}, e.value).second)
        throw ValidationError("duplicate similarity table entry");
    }
    for (const auto& [key, value] : s.table_) {
      const auto& [m, a, b] = key;
      const auto mirror = s.table_.find(std::tuple{m, b, a});
      if (mirror == s.table_.end() || mirror->second != value) {
        s.symmetric_ = false;
        break;
      }
    }
    if (!s.symmetric_ && !allow_asymmetric)
      throw ValidationError("similarity table is not symmetric (set allow_asymmetric to accept it)");
    return s;
  }

  Kind kind() const { return kind_; }
  bool symmetric() const { return symmetric_; }
  bool allow_asymmetric() const { return allow_asymmetric_; }
  double parameter() const { return value_; }

  /// Value on sub-indices a, b of the sub-space `sub` = K^|I|.
  double operator()(std::size_t a, std::size_t b, const Space& sub) const {
    switch (kind_) {
      case Kind::constant:
        return value_;
      case Kind::exponential_decay:
        return std::exp(-value_ * hamming_distance(a, b, sub));
      case Kind::table: {
        const auto it = table_.find(std::tuple{sub.length(), a, b});
        if (it == table_.end())
          throw ValidationError("similarity table has no entry for substrings " + std::to_string(a) +
                                ", " + std::to_string(b) + " of length " + std::to_string(sub.length()));
        return it->second;
      }
    }
    return 0.0;
  }

  /// Product-form kinds factor as scale * prod_j S(a_j, b_j) over the
  /// positions of I. Returns the per-position k x k factor S and the scale.
  std::optional<std::pair<double, std::vector<double>>> site_factor(std::size_t k) const {
    if (kind_ == Kind::table) return std::nullopt;
    std::vector<double> s(k * k, 1.0);
    double scale = 1.0;
    if (kind_ == Kind::constant) {
      scale = value_;
    } else {
      const double off = std::exp(-value_);
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b)
          if (a != b) s[a * k + b] = off;
    }
    return std::pair{scale, std::move(s)};
  }

  bool is_zero() const {
    if (kind_ == Kind::constant) return value_ == 0.0;
    if (kind_ == Kind::table)
      return std::all_of(table_.begin(), table_.end(), [](const auto& kv) { return kv.second == 0.0; });
    return false;
  }

 private:
  Kind kind_ = Kind::constant;
  double value_ = 1.0;
  bool symmetric_ = true;
  bool allow_asymmetric_ = false;
  std::map<std::tuple<int, std::size_t, std::size_t>, double> table_;
};

/// phi_eval on explicit substrings given as symbol-index lists.
inline double phi_eval(std::span<const int> x_sub, std::span<const int> y_sub, const SimilaritySpec& spec,
                       std::size_t k) {
  if (x_sub.size() != y_sub.size()) throw ValidationError("substrings of different lengths");
  const Space sub(k, static_cast<int>(x_sub.size()));
  return spec(sub.encode(x_sub), sub.encode(y_sub), sub);
}

struct FamilyMember {
  SubsetMask mask;
  double weight = 1.0;
};

/// All contiguous intervals with length in [min_length, max_length], by start then length.
inline std::vector<FamilyMember> interval_family(int n, int min_length, int max_length) {
  if (min_length < 1 || max_length < min_length || max_length > n)
    throw ValidationError("interval lengths must satisfy 1 <= min <= max <= n");
  std::vector<FamilyMember> out;
  for (int first = 0; first < n; ++first)
    for (int len = min_length; len <= max_length && first + len <= n; ++len)
      out.push_back({SubsetMask::interval(first, len, n), 1.0});
  return out;
}

inline constexpr int kMaxAllSubsetsLength = 12;

/// Every non-empty subset of the n positions, in increasing bit order.
inline std::vector<FamilyMember> all_subsets_family(int n) {
  if (n > kMaxAllSubsetsLength)
    throw ValidationError("the all-subsets family is limited to n <= " + std::to_string(kMaxAllSubsetsLength));
  std::vector<FamilyMember> out;
  for (std::uint64_t bits = 1; bits < (std::uint64_t{1} << n); ++bits) out.push_back({SubsetMask(bits, n), 1.0});
  return out;
}

class RecombinationModel {
 public:
  RecombinationModel(const Space& space, double kappa, std::vector<FamilyMember> family, SimilaritySpec similarity)
      : space_(space), kappa_(kappa), family_(std::move(family)), similarity_(std::move(similarity)) {
    if (!(kappa_ >= 0.0) || !std::isfinite(kappa_)) throw ValidationError("kappa must be finite and >= 0");
    for (std::size_t i = 0; i < family_.size(); ++i) {
      const auto& m = family_[i];
      if (m.mask.n() != space_.length()) throw ValidationError("family mask length does not match genome length");
      if (!(m.weight > 0.0) || !std::isfinite(m.weight)) throw ValidationError("family weights must be positive");
      for (std::size_t j = 0; j < i; ++j)
        if (family_[j].mask == m.mask) throw ValidationError("duplicate family mask " + m.mask.to_string());
      if (m.mask.is_empty()) warnings_.push_back("family contains the empty set (inert)");
      if (m.mask.is_full()) warnings_.push_back("family contains the full position set");
    }
    plans_ = std::make_shared<std::vector<Plan>>();
    for (const auto& m : family_) plans_->push_back(make_plan(m.mask));
  }

  const Space& space() const { return space_; }
  double kappa() const { return kappa_; }
  const std::vector<FamilyMember>& family() const { return family_; }
  const SimilaritySpec& similarity() const { return similarity_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Same family and similarity with another intensity (plans are shared).
  RecombinationModel with_kappa(double kappa) const {
    if (!(kappa >= 0.0)) throw ValidationError("kappa must be >= 0");
    RecombinationModel copy = *this;
    copy.kappa_ = kappa;
    return copy;
  }

  /// Weight of mask I in the family, or 1 if I is not a member.
  double weight_of(const SubsetMask& mask) const {
    for (const auto& m : family_)
      if (m.mask == mask) return m.weight;
    return 1.0;
  }

  /// Index arithmetic and similarity matrix for one family member.
  struct Plan {
    SubsetIndexer indexer;
    // Dense phi on K^|I| x K^|I|, row-major; empty for product-form kinds.
    std::vector<double> phi;
  };

  const Plan& plan(std::size_t member) const { return (*plans_)[member]; }

  Plan make_plan(const SubsetMask& mask) const {
    Plan p{SubsetIndexer(space_, mask), {}};
    if (!similarity_.site_factor(space_.k())) p.phi = dense_phi(p.indexer.sub_space());
    return p;
  }

  std::vector<double> dense_phi(const Space& sub) const {
    const auto s = sub.size();
    std::vector<double> phi(s * s);
    for (std::size_t a = 0; a < s; ++a)
      for (std::size_t b = 0; b < s; ++b) phi[a * s + b] = similarity_(a, b, sub);
    return phi;
  }

 private:
  Space space_;
  double kappa_;
  std::vector<FamilyMember> family_;
  SimilaritySpec similarity_;
  std::vector<std::string> warnings_;
  std::shared_ptr<std::vector<Plan>> plans_;
};

namespace detail {

/// out(x) = sum_b kernel(x_pos, b) * in(x with position pos set to b).
inline void apply_site_kernel(std::span<const double> in, std::span<double> out, const Space& space, int pos,
                              std::span<const double> kernel) {
  const auto k = space.k();
  const auto stride = space.stride(pos);
  for (GenomeIndex x = 0; x < space.size(); ++x) {
    const auto a = static_cast<std::size_t>(space.digit(x, pos));
    const auto base = x - a * stride;
    double s = 0.0;
    for (std::size_t b = 0; b < k; ++b) s += kernel[a * k + b] * in[base + b * stride];
    out[x] = s;
  }
}

/// Applies scale * (tensor product of `kernel` over `positions`) to `table`.
inline std::vector<double> apply_product_kernel(std::vector<double> table, const Space& space,
                                                std::span<const int> positions, std::span<const double> kernel,
                                                double scale) {
  std::vector<double> tmp(table.size());
  for (int pos : positions) {
    apply_site_kernel(table, tmp, space, pos, kernel);
    table.swap(tmp);
  }
  for (double& v : table) v *= scale;
  return table;
}

/// Adds rate * (mu_I(x_I) * G(x) - mu(x) * L(x_I)) for one family member, where
/// G(x) = sum_b phi(b, x_I) mu(x_rest, b) and L(a) = sum_b phi(a, b) mu_I(b).
inline void add_member_rhs(std::span<const double> mu, const RecombinationModel& model,
                           const RecombinationModel::Plan& plan, double rate, std::span<double> out) {
  const auto& ix = plan.indexer;
  const auto& space = model.space();
  const auto sub_size = ix.sub_size();
  std::vector<double> mu_i(sub_size, 0.0);
  for (GenomeIndex x = 0; x < mu.size(); ++x) mu_i[ix.sub_index(x)] += mu[x];

  std::vector<double> gain;
  std::vector<double> loss;
  if (const auto factor = model.similarity().site_factor(space.k())) {
    const auto& [scale, s] = *factor;
    std::vector<double> s_t(s.size());
    const auto k = space.k();
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) s_t[a * k + b] = s[b * k + a];
    const auto positions = ix.mask().positions();
    gain = apply_product_kernel(std::vector<double>(mu.begin(), mu.end()), space, positions, s_t, scale);
    std::vector<int> sub_positions(positions.size());
    std::iota(sub_positions.begin(), sub_positions.end(), 0);
    loss = apply_product_kernel(mu_i, ix.sub_space(), sub_positions, s, scale);
  } else {
    const auto& phi = plan.phi;
    gain.assign(mu.size(), 0.0);
    for (std::size_t c = 0; c < ix.comp_size(); ++c) {
      for (std::size_t a = 0; a < sub_size; ++a) {
        double g = 0.0;
        for (std::size_t b = 0; b < sub_size; ++b) g += phi[b * sub_size + a] * mu[ix.genome(c, b)];
        gain[ix.genome(c, a)] = g;
      }
    }
    loss.assign(sub_size, 0.0);
    for (std::size_t a = 0; a < sub_size; ++a)
      for (std::size_t b = 0; b < sub_size; ++b) loss[a] += phi[a * sub_size + b] * mu_i[b];
  }
  for (GenomeIndex x = 0; x < mu.size(); ++x) {
    const auto a = ix.sub_index(x);
    out[x] += rate * (mu_i[a] * gain[x] - mu[x] * loss[a]);
  }
}

}  // namespace detail

/// Recombination part of the kinetic equation, accumulated into `out`. Family
/// members are summed in their listed order.
inline void add_recombination_rhs(std::span<const double> mu, const RecombinationModel& model,
                                  std::span<double> out) {
  if (model.kappa() == 0.0) return;
  for (std::size_t i = 0; i < model.family().size(); ++i) {
    const auto& member = model.family()[i];
    if (member.mask.is_empty()) continue;
    detail::add_member_rhs(mu, model, model.plan(i), model.kappa() * member.weight, out);
  }
}

inline Table recombination_rhs(const Distribution& mu, const RecombinationModel& model) {
  if (!(mu.space() == model.space())) throw ValidationError("distribution and model live on different spaces");
  Table out(mu.size(), 0.0);
  add_recombination_rhs(mu.probs(), model, out);
  return out;
}

/// One-step kernel of I-recombination against the current law mu:
/// P(x -> y) = kappa * w_I * phi(x_I, y_I) * mu_I(y_I) * dt for y != x that agree
/// with x off I, and P(x -> x) = 1 - sum of the others.
inline StochasticMatrix transition_matrix(const Distribution& mu, const SubsetMask& mask,
                                          const RecombinationModel& model, double dt) {
  if (!(mu.space() == model.space())) throw ValidationError("distribution and model live on different spaces");
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  const SubsetIndexer ix(model.space(), mask);
  const auto mu_i = marginalize(mu, ix);
  const auto rate = model.kappa() * model.weight_of(mask);
  const auto& sub = ix.sub_space();
  const auto n_states = mu.size();
  StochasticMatrix p(n_states);
  double worst_exit = 0.0;
  for (GenomeIndex x = 0; x < n_states; ++x) {
    const auto a = ix.sub_index(x);
    const auto c = ix.comp_index(x);
    double exit = 0.0;
    double moved = 0.0;
    for (std::size_t b = 0; b < ix.sub_size(); ++b) {
      if (b == a) continue;
      const double r = rate * model.similarity()(a, b, sub) * mu_i[b];
      p(x, ix.genome(c, b)) = r * dt;
      moved += r * dt;
      exit += r;
    }
    worst_exit = std::max(worst_exit, exit);
    p(x, x) = 1.0 - moved;
  }
  if (worst_exit * dt > 1.0) {
    throw PreconditionError("dt = " + std::to_string(dt) + " makes a diagonal entry negative; maximal admissible dt is " +
                            std::to_string(1.0 / worst_exit));
  }
  return p;
}

}  // namespace recomb
