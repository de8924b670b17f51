#pragma once

// Genome-space combinatorics: the index codec for K^n, subset masks, splicing,
// marginals, product measures and the entropy functionals.
//
// Genomes are stored as indices in [0, k^n). Position 0 is the most
// significant digit: index = sum_i digit[i] * k^(n-1-i). Every dense table in
// the library (distributions, right-hand sides, transition matrices) is laid
// out in this order. A marginal over a subset I is a table over K^|I| whose
// codec uses the positions of I in ascending order.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "recomb/error.hpp"

namespace recomb {

using GenomeIndex = std::size_t;

/// Signed per-genome table (time derivatives, scratch buffers).
using Table = std::vector<double>;

inline constexpr int kMaxGenomeLength = 63;
inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kNormHardLimit = 1e-6;

/// A product space K^length with |K| = k. Used both for full genome spaces and
/// for the sub-spaces K^I that marginals live on.
class Space {
 public:
  Space() = default;

  Space(std::size_t k, int length) : k_(k), length_(length) {
    if (k < 2) throw ValidationError("alphabet size must be at least 2");
    if (length < 0 || length > kMaxGenomeLength)
      throw ValidationError("genome length out of range: " + std::to_string(length));
    strides_.assign(static_cast<std::size_t>(length), 1);
    std::size_t size = 1;
    for (int pos = length - 1; pos >= 0; --pos) {
      strides_[static_cast<std::size_t>(pos)] = size;
      if (size > std::numeric_limits<std::size_t>::max() / k)
        throw ValidationError("k^n does not fit in the index range");
      size *= k;
    }
    size_ = size;
  }

  std::size_t k() const { return k_; }
  int length() const { return length_; }
  std::size_t size() const { return size_; }
  std::size_t stride(int pos) const { return strides_[static_cast<std::size_t>(pos)]; }

  int digit(GenomeIndex x, int pos) const {
    return static_cast<int>((x / stride(pos)) % k_);
  }

  GenomeIndex encode(std::span<const int> digits) const {
    if (digits.size() != static_cast<std::size_t>(length_))
      throw ValidationError("genome has " + std::to_string(digits.size()) +
                            " positions, expected " + std::to_string(length_));
    GenomeIndex x = 0;
    for (int d : digits) {
      if (d < 0 || static_cast<std::size_t>(d) >= k_)
        throw ValidationError("symbol index " + std::to_string(d) + " out of range");
      x = x * k_ + static_cast<std::size_t>(d);
    }
    return x;
  }

  std::vector<int> decode(GenomeIndex x) const {
    check_index(x);
    std::vector<int> digits(static_cast<std::size_t>(length_));
    for (int pos = length_ - 1; pos >= 0; --pos) {
      digits[static_cast<std::size_t>(pos)] = static_cast<int>(x % k_);
      x /= k_;
    }
    return digits;
  }

  /// Index of the genome equal to x except for `pos`, which holds `symbol`.
  GenomeIndex with_digit(GenomeIndex x, int pos, int symbol) const {
    const auto s = stride(pos);
    return x - static_cast<std::size_t>(digit(x, pos)) * s + static_cast<std::size_t>(symbol) * s;
  }

  void check_index(GenomeIndex x) const {
    if (x >= size_) throw ValidationError("genome index " + std::to_string(x) + " out of range");
  }

  friend bool operator==(const Space& a, const Space& b) {
    return a.k_ == b.k_ && a.length_ == b.length_;
  }

 private:
  std::size_t k_ = 2;
  int length_ = 0;
  std::size_t size_ = 1;
  std::vector<std::size_t> strides_;
};

/// The genome space K^n together with printable symbol labels.
class AlphabetSpec {
 public:
  AlphabetSpec(std::size_t k, int n) : AlphabetSpec(k, n, default_symbols(k)) {}

  AlphabetSpec(std::size_t k, int n, std::vector<std::string> symbols)
      : space_(k, n), symbols_(std::move(symbols)) {
    if (n < 1) throw ValidationError("genome length must be at least 1");
    if (symbols_.size() != k)
      throw ValidationError("expected " + std::to_string(k) + " symbol labels, got " +
                            std::to_string(symbols_.size()));
    std::unordered_set<std::string> seen;
    for (const auto& s : symbols_) {
      if (s.empty()) throw ValidationError("empty symbol label");
      if (!seen.insert(s).second) throw ValidationError("duplicate symbol label '" + s + "'");
    }
  }

  std::size_t k() const { return space_.k(); }
  int n() const { return space_.length(); }
  std::size_t size() const { return space_.size(); }
  const Space& space() const { return space_; }
  const std::vector<std::string>& symbols() const { return symbols_; }

  GenomeIndex encode(std::span<const int> digits) const { return space_.encode(digits); }
  std::vector<int> decode(GenomeIndex x) const { return space_.decode(x); }

  int symbol_index(std::string_view label) const {
    for (std::size_t a = 0; a < symbols_.size(); ++a)
      if (symbols_[a] == label) return static_cast<int>(a);
    throw ValidationError("unknown symbol '" + std::string(label) + "'");
  }

  /// Parses a word such as "ABBA". Multi-character labels must be separated by
  /// spaces or commas; single-character alphabets may be written contiguously.
  std::vector<int> parse_word(std::string_view word, int expected_length) const {
    const auto digits = parse_symbols(word);
    if (static_cast<int>(digits.size()) != expected_length)
      throw ValidationError("word '" + std::string(word) + "' has " +
                            std::to_string(digits.size()) + " symbols, expected " +
                            std::to_string(expected_length));
    return digits;
  }

  /// Same as parse_word without a length check.
  std::vector<int> parse_symbols(std::string_view word) const {
    std::vector<int> digits;
    const bool single_char = std::all_of(symbols_.begin(), symbols_.end(),
                                         [](const std::string& s) { return s.size() == 1; });
    if (single_char && word.find_first_of(" ,") == std::string_view::npos) {
      for (char c : word) digits.push_back(symbol_index(std::string_view(&c, 1)));
    } else {
      std::size_t start = 0;
      while (start <= word.size()) {
        auto end = word.find_first_of(" ,", start);
        if (end == std::string_view::npos) end = word.size();
        if (end > start) digits.push_back(symbol_index(word.substr(start, end - start)));
        start = end + 1;
      }
    }
    return digits;
  }

  GenomeIndex parse_genome(std::string_view word) const {
    return space_.encode(parse_word(word, n()));
  }

  std::string format_digits(std::span<const int> digits) const {
    std::string out;
    const bool single_char = std::all_of(symbols_.begin(), symbols_.end(),
                                         [](const std::string& s) { return s.size() == 1; });
    for (std::size_t i = 0; i < digits.size(); ++i) {
      if (!single_char && i > 0) out += ',';
      out += symbols_[static_cast<std::size_t>(digits[i])];
    }
    return out;
  }

  std::string format_genome(GenomeIndex x) const { return format_digits(space_.decode(x)); }

 private:
  static std::vector<std::string> default_symbols(std::size_t k) {
    std::vector<std::string> out;
    for (std::size_t a = 0; a < k; ++a) {
      if (a < 26) {
        out.emplace_back(1, static_cast<char>('A' + a));
      } else {
        out.push_back("s" + std::to_string(a));
      }
    }
    return out;
  }

  Space space_;
  std::vector<std::string> symbols_;
};

/// A subset I of the positions {0, ..., n-1}, one bit per position.
class SubsetMask {
 public:
  SubsetMask() = default;

  SubsetMask(std::uint64_t bits, int n) : bits_(bits), n_(n) {
    if (n < 0 || n > kMaxGenomeLength) throw ValidationError("mask length out of range");
    if (n < 64 && (bits >> n) != 0)
      throw ValidationError("subset mask has a bit set at a position >= n");
  }

  static SubsetMask from_positions(std::span<const int> positions, int n) {
    std::uint64_t bits = 0;
    for (int p : positions) {
      if (p < 0 || p >= n) throw ValidationError("subset position " + std::to_string(p) + " out of range");
      if (bits & (std::uint64_t{1} << p))
        throw ValidationError("subset position " + std::to_string(p) + " repeated");
      bits |= std::uint64_t{1} << p;
    }
    return SubsetMask(bits, n);
  }

  static SubsetMask from_positions(std::initializer_list<int> positions, int n) {
    return from_positions(std::span<const int>(positions.begin(), positions.size()), n);
  }

  static SubsetMask empty(int n) { return SubsetMask(0, n); }
  static SubsetMask full(int n) { return SubsetMask(full_bits(n), n); }

  /// Contiguous positions [first, first + length).
  static SubsetMask interval(int first, int length, int n) {
    if (first < 0 || length < 0 || first + length > n)
      throw ValidationError("interval out of range");
    const std::uint64_t bits = length == 0 ? 0 : (full_bits(length) << first);
    return SubsetMask(bits, n);
  }

  std::uint64_t bits() const { return bits_; }
  int n() const { return n_; }
  int count() const { return std::popcount(bits_); }
  bool contains(int pos) const { return (bits_ >> pos) & 1U; }
  bool is_empty() const { return bits_ == 0; }
  bool is_full() const { return bits_ == full_bits(n_); }

  SubsetMask complement() const { return SubsetMask(full_bits(n_) & ~bits_, n_); }

  std::vector<int> positions() const {
    std::vector<int> out;
    for (int p = 0; p < n_; ++p)
      if (contains(p)) out.push_back(p);
    return out;
  }

  std::string to_string() const {
    std::string out = "{";
    bool first = true;
    for (int p : positions()) {
      if (!first) out += ',';
      out += std::to_string(p);
      first = false;
    }
    return out + "}";
  }

  friend bool operator==(const SubsetMask&, const SubsetMask&) = default;

 private:
  static std::uint64_t full_bits(int n) {
    return n >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
  }

  std::uint64_t bits_ = 0;
  int n_ = 0;
};

/// Precomputed index arithmetic for splitting genomes of `space` into the
/// I-part and the complement part.
///
/// For sub-index a in K^|I| and complement index c in K^(n-|I|),
/// genome(c, a) = comp_offset[c] + sub_offset[a].
class SubsetIndexer {
 public:
  SubsetIndexer(const Space& space, const SubsetMask& mask)
      : mask_(mask), sub_space_(space.k(), mask.count()),
        comp_space_(space.k(), space.length() - mask.count()) {
    if (mask.n() != space.length()) throw ValidationError("subset mask length does not match the space");
    const auto in = mask.positions();
    const auto out = mask.complement().positions();
    sub_offset_ = offsets(space, in);
    comp_offset_ = offsets(space, out);
    sub_of_.resize(space.size());
    comp_of_.resize(space.size());
    for (std::size_t c = 0; c < comp_offset_.size(); ++c) {
      for (std::size_t a = 0; a < sub_offset_.size(); ++a) {
        const auto x = comp_offset_[c] + sub_offset_[a];
        sub_of_[x] = a;
        comp_of_[x] = c;
      }
    }
  }

  const SubsetMask& mask() const { return mask_; }
  const Space& sub_space() const { return sub_space_; }
  const Space& comp_space() const { return comp_space_; }
  std::size_t sub_size() const { return sub_offset_.size(); }
  std::size_t comp_size() const { return comp_offset_.size(); }

  std::size_t sub_index(GenomeIndex x) const { return sub_of_[x]; }
  std::size_t comp_index(GenomeIndex x) const { return comp_of_[x]; }
  GenomeIndex genome(std::size_t comp, std::size_t sub) const {
    return comp_offset_[comp] + sub_offset_[sub];
  }

  /// Genome equal to `y` on I and to `x` elsewhere.
  GenomeIndex splice(GenomeIndex x, GenomeIndex y) const {
    return comp_offset_[comp_of_[x]] + sub_offset_[sub_of_[y]];
  }

 private:
  static std::vector<std::size_t> offsets(const Space& space, const std::vector<int>& positions) {
    // Ascending positions, big-endian inside the sub-space.
    std::vector<std::size_t> out{0};
    for (int pos : positions) {
      std::vector<std::size_t> next;
      next.reserve(out.size() * space.k());
      for (auto base : out)
        for (std::size_t a = 0; a < space.k(); ++a) next.push_back(base + a * space.stride(pos));
      out = std::move(next);
    }
    return out;
  }

  SubsetMask mask_;
  Space sub_space_;
  Space comp_space_;
  std::vector<std::size_t> sub_offset_;
  std::vector<std::size_t> comp_offset_;
  std::vector<std::size_t> sub_of_;
  std::vector<std::size_t> comp_of_;
};

/// A probability law on a (sub-)space, stored densely in codec order.
///
/// Construction enforces non-negativity and |sum - 1| <= 1e-6, and rescales
/// once the drift exceeds 1e-12.
class Distribution {
 public:
  Distribution() = default;

  Distribution(Space space, std::vector<double> probs) : space_(std::move(space)), probs_(std::move(probs)) {
    if (probs_.size() != space_.size())
      throw ValidationError("distribution has " + std::to_string(probs_.size()) +
                            " entries, expected " + std::to_string(space_.size()));
    double sum = 0.0;
    for (double p : probs_) {
      if (!std::isfinite(p)) throw NumericError("distribution entry is not finite");
      if (p < 0.0) throw ValidationError("distribution entry is negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kNormHardLimit)
      throw ValidationError("distribution sums to " + std::to_string(sum) + ", not 1");
    if (std::abs(sum - 1.0) > kNormTolerance)
      for (double& p : probs_) p /= sum;
  }

  /// Normalizes arbitrary non-negative weights with a positive total.
  static Distribution from_weights(Space space, std::vector<double> weights) {
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("weights must be finite and non-negative");
      sum += w;
    }
    if (sum <= 0.0) throw ValidationError("weights sum to zero");
    for (double& w : weights) w /= sum;
    return Distribution(std::move(space), std::move(weights));
  }

  static Distribution uniform(const Space& space) {
    return Distribution(space, std::vector<double>(space.size(), 1.0 / static_cast<double>(space.size())));
  }

  static Distribution point_mass(const Space& space, GenomeIndex x) {
    space.check_index(x);
    std::vector<double> probs(space.size(), 0.0);
    probs[x] = 1.0;
    return Distribution(space, std::move(probs));
  }

  const Space& space() const { return space_; }
  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](GenomeIndex x) const { return probs_[x]; }

  double sum() const { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

 private:
  Space space_;
  std::vector<double> probs_;
};

inline GenomeIndex encode(std::span<const int> digits, const AlphabetSpec& spec) {
  return spec.encode(digits);
}

inline std::vector<int> decode(GenomeIndex x, const AlphabetSpec& spec) { return spec.decode(x); }

/// Genome equal to `y` on the positions of I and to `x` elsewhere.
inline GenomeIndex splice(GenomeIndex x, GenomeIndex y, const SubsetMask& mask, const Space& space) {
  space.check_index(x);
  space.check_index(y);
  if (mask.n() != space.length()) throw ValidationError("subset mask length does not match the space");
  GenomeIndex out = x;
  for (int pos = 0; pos < space.length(); ++pos)
    if (mask.contains(pos)) out = space.with_digit(out, pos, space.digit(y, pos));
  return out;
}

/// Sub-index of x restricted to the positions of I (ascending, big-endian).
inline std::size_t restrict_to(GenomeIndex x, const SubsetMask& mask, const Space& space) {
  std::size_t a = 0;
  for (int pos = 0; pos < space.length(); ++pos)
    if (mask.contains(pos)) a = a * space.k() + static_cast<std::size_t>(space.digit(x, pos));
  return a;
}

inline Distribution marginalize(const Distribution& mu, const SubsetIndexer& indexer) {
  std::vector<double> out(indexer.sub_size(), 0.0);
  const auto probs = mu.probs();
  for (GenomeIndex x = 0; x < probs.size(); ++x) out[indexer.sub_index(x)] += probs[x];
  return Distribution(indexer.sub_space(), std::move(out));
}

inline Distribution marginalize(const Distribution& mu, const SubsetMask& mask) {
  return marginalize(mu, SubsetIndexer(mu.space(), mask));
}

/// prod_i site_laws[i](x_i) over the space K^n with n = site_laws.size().
inline Distribution product_measure(const Space& space, std::span<const Distribution> site_laws) {
  if (site_laws.size() != static_cast<std::size_t>(space.length()))
    throw ValidationError("product measure needs " + std::to_string(space.length()) +
                          " site laws, got " + std::to_string(site_laws.size()));
  const Space site_space(space.k(), 1);
  for (const auto& law : site_laws)
    if (!(law.space() == site_space)) throw ValidationError("site law is not a law on the alphabet");
  std::vector<double> probs(space.size(), 1.0);
  for (GenomeIndex x = 0; x < space.size(); ++x)
    for (int pos = 0; pos < space.length(); ++pos)
      probs[x] *= site_laws[static_cast<std::size_t>(pos)][static_cast<std::size_t>(space.digit(x, pos))];
  return Distribution(space, std::move(probs));
}

/// sum_x mu(x) ln mu(x), with 0 ln 0 = 0 (the negative Shannon entropy).
inline double neg_entropy(const Distribution& mu) {
  double h = 0.0;
  for (double p : mu.probs())
    if (p > 0.0) h += p * std::log(p);
  return h;
}

/// Kullback-Leibler divergence D(mu | q). q must be strictly positive.
inline double relative_entropy(const Distribution& mu, const Distribution& q) {
  if (!(mu.space() == q.space())) throw ValidationError("relative entropy of laws on different spaces");
  double d = 0.0;
  const auto p = mu.probs();
  const auto r = q.probs();
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (r[x] <= 0.0) throw DomainError("reference law has a zero entry");
    if (p[x] > 0.0) d += p[x] * std::log(p[x] / r[x]);
  }
  return std::max(d, 0.0);
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("l1 distance of tables of different sizes");
  double s = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) s += std::abs(a[x] - b[x]);
  return s;
}

inline double l1_distance(const Distribution& mu, const Distribution& nu) {
  if (!(mu.space() == nu.space())) throw ValidationError("l1 distance of laws on different spaces");
  return l1_distance(mu.probs(), nu.probs());
}

inline double total_variation(const Distribution& mu, const Distribution& nu) {
  return 0.5 * l1_distance(mu, nu);
}

inline int hamming_distance(GenomeIndex x, GenomeIndex y, const Space& space) {
  int d = 0;
  for (int pos = 0; pos < space.length(); ++pos, x /= space.k(), y /= space.k())
    d += (x % space.k()) != (y % space.k());
  return d;
}

}  // namespace recomb
