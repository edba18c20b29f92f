#pragma once
//
// Sparse polynomial algebra over the mode lattice.
//
// A polynomial is stored as { canonical multi-index -> coefficient }.  The
// stored coefficient is the *symmetrized* one: P(u) = sum_{multisets} P_J u^J,
// i.e. the multinomial multiplicity of the ordered-tuple expansion is folded
// into P_J.  Derivatives therefore carry multiplicity factors
//     d/du_K u^J = mult_K(J) u^{J \ K},
// and the per-ordered-tuple coefficient sup ("C_P" in the norm estimates) is
//     sup_J |P_J| / perm(J),   perm(J) = d!/prod(mult_i!).
//
// Hamiltonian vector field and Poisson bracket conventions:
//     (X_P)_{(j,sigma)} = -sigma * i * dP/du_{(j,-sigma)},
//     {P,Q} = -i sum_{(j,sigma)} sigma (dP/du_{(j,sigma)}) (dQ/du_{(j,-sigma)}),
// which satisfy dF/dt = {F,H} along the flow of X_H and the degree law
// deg {P_p, Q_q} = p + q - 2.  Note {H0, u^J} = +i Omega(J) u^J for diagonal
// H0 = sum omega_j u_{(j,+)} u_{(j,-)}, with Omega(J) = sum_l sigma_l omega_{j_l}.
//
// The same template serves complex<double> and exact Gaussian-rational
// coefficients; operator-norm machinery (|P|_{r,s} bounds, Monte Carlo probes)
// is double-only.

#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nflab/errors.hpp"
#include "nflab/lattice.hpp"
#include "nflab/rational.hpp"
#include "nflab/weights.hpp"

namespace nflab {

// ── coefficient traits ───────────────────────────────────────────────────────

template <class K>
struct CoeffOps;

template <>
struct CoeffOps<std::complex<double>> {
  using K = std::complex<double>;
  static bool is_zero(const K& v) { return v.real() == 0.0 && v.imag() == 0.0; }
  static K conj(const K& v) { return std::conj(v); }
  static K times_i(const K& v) { return K(-v.imag(), v.real()); }
  static K from_int(long long n) { return K(static_cast<double>(n), 0.0); }
  static double abs(const K& v) { return std::abs(v); }
};

template <>
struct CoeffOps<GaussianRational> {
  using K = GaussianRational;
  static bool is_zero(const K& v) { return v.is_zero(); }
  static K conj(const K& v) { return v.conj(); }
  static K times_i(const K& v) { return v.times_i(); }
  static K from_int(long long n) { return K(Rational(n)); }
  static double abs(const K& v) {
    const double re = v.re.to_double(), im = v.im.to_double();
    return std::sqrt(re * re + im * im);
  }
};

inline constexpr std::size_t kDefaultTermBudget = 1'000'000;

// ── the polynomial ───────────────────────────────────────────────────────────

template <class K>
struct PolynomialT {
  using Ops = CoeffOps<K>;
  using TermMap = std::unordered_map<MultiIndex, K, MultiIndexHash>;
  TermMap terms;

  bool empty() const { return terms.empty(); }
  std::size_t term_count() const { return terms.size(); }

  void add_term(const MultiIndex& key, const K& coeff) {
    if (Ops::is_zero(coeff)) return;
    auto [it, inserted] = terms.try_emplace(key, coeff);
    if (!inserted) {
      it->second = it->second + coeff;
      if (Ops::is_zero(it->second)) terms.erase(it);
    }
  }

  K coefficient(const MultiIndex& key) const {
    auto it = terms.find(key);
    return it == terms.end() ? K{} : it->second;
  }

  PolynomialT& operator+=(const PolynomialT& o) {
    for (const auto& [k, v] : o.terms) add_term(k, v);
    return *this;
  }
  PolynomialT& operator-=(const PolynomialT& o) {
    for (const auto& [k, v] : o.terms) add_term(k, -v);
    return *this;
  }
  friend PolynomialT operator+(PolynomialT a, const PolynomialT& b) { return a += b; }
  friend PolynomialT operator-(PolynomialT a, const PolynomialT& b) { return a -= b; }

  PolynomialT scaled(const K& c) const {
    PolynomialT out;
    if (Ops::is_zero(c)) return out;
    for (const auto& [k, v] : terms) out.terms.emplace(k, v * c);
    return out;
  }

  int min_degree() const {
    int d = -1;
    for (const auto& [k, v] : terms)
      if (d < 0 || k.degree() < d) d = k.degree();
    return d;
  }
  int max_degree() const {
    int d = -1;
    for (const auto& [k, v] : terms)
      if (k.degree() > d) d = k.degree();
    return d;
  }

  bool momentum_conserving() const {
    for (const auto& [k, v] : terms)
      if (!k.momentum_zero()) return false;
    return true;
  }

  // Reality: coefficient(conj J) == conj(coefficient(J)) for every key.
  bool is_real() const {
    for (const auto& [k, v] : terms) {
      const auto other = coefficient(k.conjugate());
      if (!Ops::is_zero(other - Ops::conj(v))) return false;
    }
    return true;
  }

  PolynomialT conjugated() const {
    PolynomialT out;
    for (const auto& [k, v] : terms) out.terms.emplace(k.conjugate(), Ops::conj(v));
    return out;
  }

  // Deterministic iteration order for serialization and exact comparisons.
  std::vector<std::pair<MultiIndex, K>> sorted_terms() const {
    std::vector<std::pair<MultiIndex, K>> out(terms.begin(), terms.end());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }
};

using Polynomial = PolynomialT<std::complex<double>>;
using RationalPolynomial = PolynomialT<GaussianRational>;

// ── algebra ──────────────────────────────────────────────────────────────────

// {P,Q} restricted to output degree <= degree_cap.  Pair products that would
// land above the cap are skipped before they are formed, so the intermediate
// never outgrows the truncated result.  Throws BudgetError if the result
// would exceed `budget` terms.
template <class K>
PolynomialT<K> poisson_capped(const PolynomialT<K>& P, const PolynomialT<K>& Q, int degree_cap,
                              std::size_t budget = kDefaultTermBudget) {
  PolynomialT<K> out;
  for (const auto& [jkey, pc] : P.terms) {
    std::size_t a = 0;
    while (a < jkey.entries.size()) {
      std::size_t b = a;
      while (b + 1 < jkey.entries.size() && jkey.entries[b + 1] == jkey.entries[a]) ++b;
      const ModeIndex K1 = jkey.entries[a];
      const long long m1 = static_cast<long long>(b - a + 1);
      const ModeIndex K1bar = K1.conjugate();
      const MultiIndex jrest = jkey.without(K1);
      for (const auto& [mkey, qc] : Q.terms) {
        if (static_cast<int>(jkey.entries.size() + mkey.entries.size()) - 2 > degree_cap)
          continue;
        const int m2 = mkey.multiplicity(K1bar);
        if (m2 == 0) continue;
        // -i * sigma * m1 * m2 * P_J * Q_M on (J \ K1) u (M \ K1bar)
        const K prod = pc * qc * CoeffOps<K>::from_int(-K1.sigma * m1 * m2);
        out.add_term(MultiIndex::merged(jrest, mkey.without(K1bar)),
                     CoeffOps<K>::times_i(prod));
        if (out.terms.size() > budget) throw BudgetError("poisson bracket exceeded term budget");
      }
      a = b + 1;
    }
  }
  return out;
}

// {P,Q} without a degree cap.
template <class K>
PolynomialT<K> poisson(const PolynomialT<K>& P, const PolynomialT<K>& Q,
                       std::size_t budget = kDefaultTermBudget) {
  return poisson_capped(P, Q, std::numeric_limits<int>::max(), budget);
}

// Splits by total degree: first component keeps degree <= d.
template <class K>
std::pair<PolynomialT<K>, PolynomialT<K>> project_high_degree(const PolynomialT<K>& P, int d) {
  std::pair<PolynomialT<K>, PolynomialT<K>> out;
  for (const auto& [k, v] : P.terms)
    (k.degree() <= d ? out.first : out.second).terms.emplace(k, v);
  return out;
}

// Splits by high-mode count: second component has high_count >= min_high.
template <class K>
std::pair<PolynomialT<K>, PolynomialT<K>> project_high_modes(const PolynomialT<K>& P, double N,
                                                             int min_high = 3) {
  std::pair<PolynomialT<K>, PolynomialT<K>> out;
  for (const auto& [k, v] : P.terms)
    (k.high_count(N) >= min_high ? out.second : out.first).terms.emplace(k, v);
  return out;
}

// ── evaluation and fields (double scalars) ───────────────────────────────────

std::complex<double> evaluate(const Polynomial& P, const WeightedState& u);

// (X_P)_{(j,sigma)} = -sigma i dP/du_{(j,-sigma)} at the state u.
WeightedState vector_field(const Polynomial& P, const WeightedState& u);

// ── operator norm |P|_{r,s} machinery (double scalars) ───────────────────────

// sup over stored coefficients, |P_J|.
double max_stored_coeff(const Polynomial& P);
// Ordered-tuple sup, sup_J |P_J|/perm(J): the "C_P" of the estimates.
double coeff_sup_ordered(const Polynomial& P);

// Slicewise Lemma-style upper bound sum_deg C_P(deg) r^{deg-2} (a degree-2
// slice contributes 2 C_P, degree-1 contributes C_P/r).
double norm_upper_bound(const Polynomial& P, double r);

// Monte Carlo lower estimate of |P|_{r,s}: max over sampled ||u||_s = r of
// ||X_P(u)||_s / r.
double norm_mc_estimate(const Polynomial& P, double r, const WeightSpec& w, int samples,
                        std::uint64_t seed);

// For P with every monomial carrying >= 3 modes above N:
//   |P|_{r,s} <= sum_deg C_P(deg) 2^deg r^{deg-2} / e^{(s-s0) f(N)}.
// Throws PropertyError if some monomial has fewer than 3 high modes.
double cutting_bound(const Polynomial& P, double r, double N, const WeightSpec& w);

// ── serialization ────────────────────────────────────────────────────────────

// One line per term: [[[j...],sigma],...],re,im with canonical key order.
std::string polynomial_to_json(const Polynomial& P, int dim);
Polynomial polynomial_from_json(const std::string& text);

// ── random test material ─────────────────────────────────────────────────────

// Real momentum-conserving polynomial with degrees d_min..d_max, every mode
// within `radius`, and coefficient parts uniform in [-coeff_scale, coeff_scale]
// (conjugate pairs locked so is_real() holds).  Deterministic in the seed.
Polynomial random_real_polynomial(const LatticeGeometry& geom, double radius, int d_min,
                                  int d_max, double coeff_scale, std::uint64_t seed);

}  // namespace nflab
