#pragma once
//
// Constants ledger, the degree/cutoff balancing equation, and stability-time
// predictions.
//
// Everything time-like lives in log space: the predicted horizons behave like
// exp(C_fin f(N)) with f(N) in the hundreds, far beyond double range.

#include <string>
#include <vector>

#include "nflab/weights.hpp"

namespace nflab {

struct LedgerInputs {
  double C0 = 2.0;
  double C1 = 1.0;   // block shell thickness
  double C2 = 0.5;
  double beta = 2.0;
  double delta = 1.0;
  double tau = 1.0;
  double gamma = 0.5;
  int p = 1;
  double C_P = 1.0;
  double s = 1.0;
  double Cf = 0.5;
  double f_C1 = 1.0;  // weight value at the shell thickness
  double s0 = 0.1;
};

struct ConstantsLedger {
  LedgerInputs in;
  double C_sep = 0;   // C0^(2/beta)
  double C_deno = 0;  // (C0/C2 + C0^2)^beta
  double C_exp = 0;   // tau (1 + beta/delta) + 1
  double C_estP = 0;  // 64 e^2 C_P^2 / gamma
  double C_thre = 0;  // max{32 C_P e/gamma, 2, 24 e^2/gamma, C_estP 16 e/gamma, e^{2 s Cf f(C1)}}
  double C_rema = 0;  // max{48 e (e^{1/(16e)} - 1), C_estP, e C_P, C_deno}
  double C_fin = 0;   // 2^{p+2} C_exp
  double D_fin = 0;   // max{4 C_rema, 32 e^2/gamma}
  double S_fin = 0;   // s0 + C_fin
  double C_sta = 0;   // e^{-2 s Cf f(C1)}  (contraction factor; its inverse scales norms)

  // E bound for the generator smallness test at degree d.
  double E(int d) const;
  // ln of the homological denominator floor gamma/(C_deno d N)^{C_exp d^p}.
  double ln_divisor_floor(int d, double N) const;
  // ln of the smallness gate r d^2 C_thre (C_deno d N)^{C_exp d^p}.
  double ln_gate(double r, int d, double N) const;
};

ConstantsLedger build_ledger(const LedgerInputs& in);
ConstantsLedger build_ledger(const WeightSpec& w, const LedgerInputs& partial);

// Branch -1 of x e^x = y on x < -1, valid for y in (-2 e^{-2}, 0).  Bisection
// seeded from the two-sided bound ln(-1/y) < -W < 2 ln(-1/y), polished by
// Newton; relative residual below max(tol, 4 eps |x|) -- the second term is
// the ulp-of-the-root floor that binds once |x| exceeds a few hundred.
double lambert_w_minus1(double y, double tol = 1e-13);

struct BalanceSolution {
  double N = 0;         // cutoff solving d^p ln(dN) = f(N)/d
  double ln_N = 0;
  double ln_abs_r = 0;  // |ln r| = 2 d^p ln(dN)
  double closed_form_N = 0;  // Gevrey only: d^{-1} exp(-W_{-1}(-theta d^{-(theta+p+1)})/theta)
};
// Bisection in ln N; Gevrey instances are cross-checked against the
// Lambert-form solution (disagreement beyond 1e-6 relative throws).
BalanceSolution solve_balance(const WeightSpec& w, int p, int d);

struct StabilityPrediction {
  double eps = 0;
  int d = 0;
  double N = 0;
  double ln_T = 0;    // C_fin f(N) - ln C_sta
  double ln_T_s = 0;  // C_fin s f(N) - ln C_sta (scale-weighted variant)
  std::string regime;  // "gevrey" or "logultra"
  double a = 0;        // LogUltra admissible exponent bound (q-1)/(qp+1)
};

// Largest degree d >= 4 whose balanced radius still admits eps, then the
// horizon exponent at its cutoff.  Throws ConfigError when eps >= eps0.
StabilityPrediction predict_time(const WeightSpec& w, int p, double eps,
                                 const ConstantsLedger& ledger, double eps0);

// Balanced radius at the gate degree ceil(max(4, D_fin)): the default eps
// threshold when the config does not pin one.
double default_eps0(const WeightSpec& w, int p, const ConstantsLedger& ledger);

// Diagnostic for the same-order claim at p = 1: f(N(d)) ln|ln r| / |ln r|^2.
double gevrey_order_ratio(const WeightSpec& w, int p, int d);

inline double logultra_admissible_a(double q, int p) { return (q - 1.0) / (q * p + 1.0); }

}  // namespace nflab
