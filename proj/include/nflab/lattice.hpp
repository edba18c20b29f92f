#pragma once
//
// Index lattice for the mode algebra.
//
// A mode is a pair J = (j, sigma) with j in Z^dim (dim <= 3) and sigma = +-1;
// sigma tags the coordinate u_{(j,+1)} versus its symplectic partner
// u_{(j,-1)}.  Monomials are multisets of modes; we keep them as sorted
// vectors ("canonical order": by |j|^2, then lexicographic j, then sigma), so
// a multiset has exactly one stored representation and can key a hash map.
//
// Conventions fixed here and relied upon everywhere else:
//   |J|   = Euclidean norm of j,
//   <j>   = max(|j|, c) with c >= 1 (weight functions are evaluated at <j>),
//   momentum(J_1..J_d) = sum_l sigma_l j_l (componentwise),
//   high_count(N) = #{l : |J_l| > N},
//   paired: for every j the +1 and -1 multiplicities agree (this forces even
//           degree and zero momentum, and it kills sum sigma_l w(j_l) for any
//           radial function w).

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace nflab {

using JVec = std::array<int, 3>;  // unused trailing components stay zero

struct LatticeGeometry {
  int dim = 1;       // spatial dimension of the torus
  int k_max = 8;     // Galerkin cutoff: |j|_inf <= k_max
  double c = 2.0;    // floor in <j> = max(|j|, c); c >= 1
};

struct ModeIndex {
  JVec j{0, 0, 0};
  int sigma = +1;

  long long radius2() const {
    long long r = 0;
    for (int a : j) r += static_cast<long long>(a) * a;
    return r;
  }
  double radius() const { return std::sqrt(static_cast<double>(radius2())); }
  double angle_bracket(double c) const { return std::max(radius(), c); }
  ModeIndex conjugate() const { return ModeIndex{j, -sigma}; }

  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
  friend std::strong_ordering operator<=>(const ModeIndex& a, const ModeIndex& b) {
    if (auto c = a.radius2() <=> b.radius2(); c != 0) return c;
    if (auto c = a.j <=> b.j; c != 0) return c;
    return a.sigma <=> b.sigma;
  }
};

inline ModeIndex mode(int j0, int sigma) { return ModeIndex{{j0, 0, 0}, sigma}; }
inline ModeIndex mode2(int j0, int j1, int sigma) { return ModeIndex{{j0, j1, 0}, sigma}; }

// Canonically ordered multiset of modes.  Degree 0 (empty) is permitted so the
// polynomial algebra stays total under brackets of low-degree test inputs.
struct MultiIndex {
  std::vector<ModeIndex> entries;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<ModeIndex> e) : entries(std::move(e)) { canonicalize(); }
  MultiIndex(std::initializer_list<ModeIndex> e) : entries(e) { canonicalize(); }

  void canonicalize() { std::sort(entries.begin(), entries.end()); }

  int degree() const { return static_cast<int>(entries.size()); }

  JVec momentum() const {
    JVec m{0, 0, 0};
    for (const auto& e : entries)
      for (int a = 0; a < 3; ++a) m[a] += e.sigma * e.j[a];
    return m;
  }
  bool momentum_zero() const { return momentum() == JVec{0, 0, 0}; }

  int high_count(double N) const {
    const double n2 = N * N;
    int s = 0;
    for (const auto& e : entries)
      if (static_cast<double>(e.radius2()) > n2) ++s;
    return s;
  }

  MultiIndex conjugate() const {
    MultiIndex out;
    out.entries.reserve(entries.size());
    for (const auto& e : entries) out.entries.push_back(e.conjugate());
    out.canonicalize();
    return out;
  }

  // Multiplicity of a specific mode in the multiset.
  int multiplicity(const ModeIndex& m) const {
    auto [lo, hi] = std::equal_range(entries.begin(), entries.end(), m);
    return static_cast<int>(hi - lo);
  }

  // Number of distinct orderings d!/prod(mult_i!), exact for desk degrees.
  double permutation_count() const {
    double num = 1.0;
    for (std::size_t i = 1; i < entries.size(); ++i) num *= static_cast<double>(i + 1);
    std::size_t i = 0;
    while (i < entries.size()) {
      std::size_t r = i;
      while (r + 1 < entries.size() && entries[r + 1] == entries[i]) ++r;
      double fact = 1.0;
      for (std::size_t k = 2; k <= r - i + 1; ++k) fact *= static_cast<double>(k);
      num /= fact;
      i = r + 1;
    }
    return num;
  }

  // Cancellation test: every j carries equal numbers of +1 and -1 tags.
  bool is_paired() const {
    if (entries.size() % 2 != 0) return false;
    std::map<JVec, int> signed_count;
    for (const auto& e : entries) signed_count[e.j] += e.sigma;
    for (const auto& [jv, s] : signed_count)
      if (s != 0) return false;
    return true;
  }

  // Removes one copy of m; caller guarantees membership.
  MultiIndex without(const ModeIndex& m) const {
    MultiIndex out;
    out.entries = entries;
    auto it = std::lower_bound(out.entries.begin(), out.entries.end(), m);
    out.entries.erase(it);
    return out;
  }

  // Merge keeps canonical order without a re-sort.
  static MultiIndex merged(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex out;
    out.entries.resize(a.entries.size() + b.entries.size());
    std::merge(a.entries.begin(), a.entries.end(), b.entries.begin(), b.entries.end(),
               out.entries.begin());
    return out;
  }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) {
    return std::lexicographical_compare_three_way(a.entries.begin(), a.entries.end(),
                                                  b.entries.begin(), b.entries.end());
  }
};

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& m) const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ULL;
    };
    for (const auto& e : m.entries) {
      for (int a : e.j) mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(a)) + 0x7fff);
      mix(e.sigma > 0 ? 2u : 1u);
    }
    return static_cast<std::size_t>(h);
  }
};

struct ModeIndexHash {
  std::size_t operator()(const ModeIndex& m) const {
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ULL;
    };
    for (int a : m.j) mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(a)) + 0x7fff);
    mix(m.sigma > 0 ? 2u : 1u);
    return static_cast<std::size_t>(h);
  }
};

struct SplitModes {
  MultiIndex low;   // entries with |J| <= N
  MultiIndex high;  // entries with |J| > N
};

inline SplitModes split_modes(const MultiIndex& m, double N) {
  SplitModes out;
  const double n2 = N * N;
  for (const auto& e : m.entries) {
    if (static_cast<double>(e.radius2()) > n2)
      out.high.entries.push_back(e);
    else
      out.low.entries.push_back(e);
  }
  return out;  // both halves inherit canonical order
}

// Dyadic-style shell partition: block 0 is {|J| <= omega0_radius}; block k >= 1
// is the shell (omega0_radius + (k-1) t, omega0_radius + k t] of thickness t.
struct BlockPartition {
  double omega0_radius = 2.0;
  double thickness = 1.0;

  int block_of(const ModeIndex& m) const {
    const double r = m.radius();
    if (r <= omega0_radius) return 0;
    return static_cast<int>(std::ceil((r - omega0_radius) / thickness - 1e-12));
  }

  // Shell boundaries up to radius_max, for reports.
  std::vector<double> cutoffs(double radius_max) const {
    std::vector<double> out{omega0_radius};
    double r = omega0_radius;
    while (r < radius_max) {
      r += thickness;
      out.push_back(r);
    }
    return out;
  }
};

// All modes with |j|_inf <= k_max, both sigma tags, in canonical order.
std::vector<ModeIndex> enumerate_modes(const LatticeGeometry& geom);

// All j in Z^dim with |j|_inf <= k_max (sigma-free), lexicographic.
std::vector<JVec> enumerate_sites(const LatticeGeometry& geom);

// Both signs over sites with |j| <= N (< N when strict), canonically sorted.
std::vector<ModeIndex> modes_within_radius(const LatticeGeometry& geom, double N,
                                           bool strict = false);

// Number of degree-sized multisets over n modes, C(n+degree-1, degree), as a
// double (overflow-safe for budget checks).
double multiset_count(std::size_t n, int degree);

// Visits every multiset of `degree` entries drawn from `modes` (assumed
// canonically sorted, so the emitted MultiIndex is already canonical).  The
// MultiIndex handed to fn is reused between calls; copy it to keep it.
template <class F>
void enumerate_multisets(const std::vector<ModeIndex>& modes, int degree, F&& fn) {
  if (modes.empty() || degree < 1) return;
  const std::size_t M = modes.size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(degree), 0);
  MultiIndex m;
  m.entries.resize(static_cast<std::size_t>(degree));
  while (true) {
    for (std::size_t l = 0; l < idx.size(); ++l) m.entries[l] = modes[idx[l]];
    fn(m);
    std::size_t pos = idx.size();
    while (pos > 0 && idx[pos - 1] == M - 1) --pos;
    if (pos == 0) break;
    const std::size_t v = idx[pos - 1] + 1;
    for (std::size_t l = pos - 1; l < idx.size(); ++l) idx[l] = v;
  }
}

std::string to_string(const ModeIndex& m);
std::string to_string(const MultiIndex& m);

}  // namespace nflab
