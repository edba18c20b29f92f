#pragma once
//
// Resonance classification, the homological equation, and the degree-by-degree
// Lie-transform iteration that produces N-cutting normal forms.
//
// Classification of a momentum-conserving multi-index with s = #{|J_l| > N}:
//   s = 0: R0 when the divisor cancels structurally, else NR0
//   s = 1: NR1
//   s = 2: sigma1 sigma2 = +1 -> NR21; = -1 same block -> R2, else NR22
//   s >= 3: HIGH
// Two amendments carried as decisions: the same-block R2 test precedes the
// pairing test (paired high pairs are stored once, in the R2 bucket), and an
// exactly vanishing divisor at s <= 2 is routed to R0 even when unpaired
// (integer frequencies admit such cancellations; dividing by them is not an
// option).
//
// The homological solve puts G = i P / Omega on nonresonant monomials, so that
// {H0, G} + P = Z holds coefficient-exactly under this library's bracket sign
// ({H0, u^J} = +i Omega(J) u^J).

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "nflab/polyalg.hpp"
#include "nflab/spectrum.hpp"
#include "nflab/stability.hpp"

namespace nflab {

enum class ResonanceClass { R0, NR0, NR1, NR21, NR22, R2, HIGH };

const char* to_string(ResonanceClass c);
inline bool is_resonant(ResonanceClass c) {
  return c == ResonanceClass::R0 || c == ResonanceClass::R2;
}

ResonanceClass classify(const MultiIndex& m, const FrequencyModel& model, double N,
                        const BlockPartition& part = {});

// Diagonal quadratic sum omega_j u_{(j,+)} u_{(j,-)} over sites |j| <= radius_limit.
Polynomial h0_polynomial(const FrequencyModel& model, double radius_limit);
RationalPolynomial h0_polynomial_exact(const FrequencyModel& model, double radius_limit);

// {H0, Q} computed diagonally: coefficient i Omega(J) Q_J.  Exact for any
// support (no truncation of H0 involved).
template <class K>
PolynomialT<K> h0_bracket(const FrequencyModel& model, const PolynomialT<K>& Q) {
  PolynomialT<K> out;
  for (const auto& [key, coeff] : Q.terms) {
    if constexpr (std::is_same_v<K, GaussianRational>) {
      const GaussianRational om(Rational(divisor_int(model, key)));
      out.add_term(key, CoeffOps<K>::times_i(coeff) * om);
    } else {
      out.add_term(key, CoeffOps<K>::times_i(coeff) * K(divisor(model, key), 0.0));
    }
  }
  return out;
}

template <class K>
struct HomologicalSplit {
  PolynomialT<K> Z;  // classes R0 and R2, copied verbatim
  PolynomialT<K> G;  // i P_J / Omega(J) on the nonresonant classes
  double ln_gain = 0.0;          // ln[(C_deno d N)^{C_exp d^p} / gamma], the |G| <= gain |P| factor
  double min_abs_divisor = 0.0;  // smallest |Omega| actually divided by (0 when G empty)
};

// Splits P into resonant part Z and generator G with {H0,G} + P = Z.  Inputs
// must be momentum conserving with < 3 high modes per monomial.  Nonresonant
// divisors are checked against the ledger floor gamma/(C_deno d N)^{C_exp d^p}
// in log space; a violation is a hard error naming the witness.
template <class K>
HomologicalSplit<K> solve_homological(const PolynomialT<K>& P, const FrequencyModel& model,
                                      double N, const ConstantsLedger& ledger, int d,
                                      const BlockPartition& part = {}) {
  HomologicalSplit<K> out;
  const double ln_floor = ledger.ln_divisor_floor(d, N);
  out.ln_gain = -ln_floor;
  bool any = false;
  for (const auto& [key, coeff] : P.terms) {
    const ResonanceClass c = classify(key, model, N, part);
    if (c == ResonanceClass::HIGH)
      throw PropertyError("solve_homological: monomial with >= 3 high modes: " + to_string(key));
    if (is_resonant(c)) {
      out.Z.terms.emplace(key, coeff);
      continue;
    }
    double abs_om = 0.0;
    if constexpr (std::is_same_v<K, GaussianRational>) {
      const long long om = divisor_int(model, key);
      if (om == 0)
        throw PropertyError("solve_homological: vanishing divisor escaped classification at " +
                            to_string(key));
      abs_om = std::abs(static_cast<double>(om));
      out.G.terms.emplace(key, CoeffOps<K>::times_i(coeff) / Rational(om));
    } else {
      const double om = divisor(model, key);
      if (om == 0.0)
        throw PropertyError("solve_homological: vanishing divisor escaped classification at " +
                            to_string(key));
      abs_om = std::abs(om);
      out.G.terms.emplace(key, CoeffOps<K>::times_i(coeff) * K(1.0 / om, 0.0));
    }
    if (std::log(abs_om) < ln_floor)
      throw PropertyError("solve_homological: divisor " + std::to_string(abs_om) +
                          " below the ledger floor at " + to_string(key) +
                          " (gamma inadmissible for this model)");
    if (!any || abs_om < out.min_abs_divisor) out.min_abs_divisor = abs_om;
    any = true;
  }
  return out;
}

// Minimal n with n(k-2) + k > d: the Lie series length making every dropped
// term exceed degree d.
int lie_series_length(int k, int d);

struct LieParts {
  Polynomial kept;    // degree <= d and < 3 high modes
  Polynomial to_Rd;   // degree in (d, degree_cap]
  Polynomial to_Rgt;  // >= 3 high modes (any degree <= degree_cap)
};

// Truncated Lie series delta = sum_{l=1..n} ad_G^l X / l! routed by the
// destination rule above.  The identity part X itself is not included.
// Terms beyond degree_cap are pruned (every further bracket only raises
// degree, so pruning is stable); their mass belongs to the bound trackers.
LieParts lie_transform_truncated(const Polynomial& X, const Polynomial& G, int n, int d, double N,
                                 int degree_cap, std::size_t budget = kDefaultTermBudget);

struct BirkhoffOptions {
  int d = 5;                // final normal-form degree
  double N = 3.0;           // mode cutoff
  double r = 1e-3;          // analysis radius for the bound chain
  BlockPartition part{};
  bool override_gate = false;      // run despite a failing smallness gate
  bool explicit_remainders = true; // keep R_poly / R_high as polynomials
  int remainder_degree_cap = 0;    // 0 -> d + 3
  std::size_t term_budget = kDefaultTermBudget;
};

struct StepTrace {
  int k = 0;         // degrees k..d solved at this step
  double r_k = 0.0;  // shrinking radius 2r - (k-3) r/(d-3)
  int n_lie = 0;
  double E = 0.0;              // 1/(16 e d)
  double ln_P_bound = 0.0;     // chain d^{2k-7} (C_estP r)^{k-2} (C_deno d N)^{C_exp (k-3) d^p}
  double ln_G_bound = 0.0;     // ln_P_bound + ln_gain
  bool G_small = false;        // ln_G_bound <= ln E
  double ln_Rd_step = 0.0;     // series-tail estimate (1/n!) |P_k| (|G|/2E)^n, log scale
  std::size_t z_terms = 0, g_terms = 0, p_terms = 0;
};

struct NormalFormOutput {
  Polynomial Z0;   // R0 part: paired/vanishing-divisor low monomials
  Polynomial Zgt;  // R2 part: two opposite-sign high modes in one block
  std::vector<Polynomial> generators;  // G_4 .. G_{d+1}
  Polynomial R_poly;  // explicit degree remainder, degrees d+1..cap
  Polynomial R_high;  // explicit >= 3-high-mode remainder
  double ln_Rd_bound = 0.0;   // (d-2) ln r + C_exp d^{p+1} ln(C_rema d N)
  double ln_Rgt_bound = 0.0;  // tracked recursion; equals ln(C_R r) - (s-s0) f(N)
  double gate_ln = 0.0;       // ln[r d^2 C_thre (C_deno d N)^{C_exp d^p}]
  bool gate_ok = false;
  int d = 0;
  double N = 0.0, r = 0.0;
  std::vector<StepTrace> trace;
};

// Degree-by-degree normal-form iteration k = 3..d.  H0 is never represented
// explicitly: its bracket with each generator is substituted from the
// homological identity ad_G H0 = Z* - P, and the order >= 2 part of its Lie
// series is the series of (Z* - P) shifted by one bracket.
NormalFormOutput birkhoff_iterate(const Polynomial& P, const FrequencyModel& model,
                                  const WeightSpec& w, const ConstantsLedger& ledger,
                                  const BirkhoffOptions& opt);

std::string normal_form_to_json(const NormalFormOutput& nf, int dim);

}  // namespace nflab
