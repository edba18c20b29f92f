#include "nflab/stability.hpp"

#include <cmath>
#include <limits>

#include "nflab/errors.hpp"

namespace nflab {

namespace {
constexpr double kE = 2.718281828459045235;

void validate(const LedgerInputs& in) {
  if (!(in.C0 >= 1.0)) throw ConfigError("ledger: C0 must be >= 1");
  if (!(in.C1 >= 1.0)) throw ConfigError("ledger: C1 must be >= 1");
  if (!(in.C2 > 0.0)) throw ConfigError("ledger: C2 must be positive");
  if (!(in.beta > 1.0)) throw ConfigError("ledger: beta must exceed 1");
  if (!(in.delta > 0.0)) throw ConfigError("ledger: delta must be positive");
  if (!(in.tau > 0.0)) throw ConfigError("ledger: tau must be positive");
  if (!(in.gamma > 0.0 && in.gamma <= 1.0)) throw ConfigError("ledger: gamma must lie in (0,1]");
  if (in.p < 1) throw ConfigError("ledger: p must be >= 1");
  if (!(in.C_P > 0.0)) throw ConfigError("ledger: C_P must be positive");
  if (!(in.Cf > 0.0 && in.Cf < 1.0)) throw ConfigError("ledger: Cf must lie in (0,1)");
  if (!(in.f_C1 > 0.0)) throw ConfigError("ledger: f(C1) must be positive");
  if (!(in.s > in.s0 && in.s0 >= 0.0)) throw ConfigError("ledger: need s > s0 >= 0");
}
}  // namespace

double ConstantsLedger::E(int d) const {
  if (d < 1) throw ConfigError("E(d): d must be >= 1");
  return 1.0 / (16.0 * kE * d);
}

double ConstantsLedger::ln_divisor_floor(int d, double N) const {
  return std::log(in.gamma) - C_exp * std::pow(double(d), in.p) * std::log(C_deno * d * N);
}

double ConstantsLedger::ln_gate(double r, int d, double N) const {
  return std::log(r) + 2.0 * std::log(double(d)) + std::log(C_thre) +
         C_exp * std::pow(double(d), in.p) * std::log(C_deno * d * N);
}

ConstantsLedger build_ledger(const LedgerInputs& in) {
  validate(in);
  ConstantsLedger c;
  c.in = in;
  c.C_sep = std::pow(in.C0, 2.0 / in.beta);
  c.C_deno = std::pow(in.C0 / in.C2 + in.C0 * in.C0, in.beta);
  c.C_exp = in.tau * (1.0 + in.beta / in.delta) + 1.0;
  c.C_estP = 64.0 * kE * kE * in.C_P * in.C_P / in.gamma;
  c.C_sta = std::exp(-2.0 * in.s * in.Cf * in.f_C1);
  c.C_thre = std::max({32.0 * in.C_P * kE / in.gamma, 2.0, 24.0 * kE * kE / in.gamma,
                       c.C_estP * 16.0 * kE / in.gamma, 1.0 / c.C_sta});
  c.C_rema = std::max({48.0 * kE * (std::exp(1.0 / (16.0 * kE)) - 1.0), c.C_estP, kE * in.C_P,
                       c.C_deno});
  c.C_fin = std::pow(2.0, in.p + 2) * c.C_exp;
  c.D_fin = std::max(4.0 * c.C_rema, 32.0 * kE * kE / in.gamma);
  c.S_fin = in.s0 + c.C_fin;
  return c;
}

ConstantsLedger build_ledger(const WeightSpec& w, const LedgerInputs& partial) {
  LedgerInputs in = partial;
  in.Cf = w.Cf;
  in.f_C1 = w.value(std::max(in.C1, 1.0));
  in.s = w.s;
  in.s0 = w.s0;
  return build_ledger(in);
}

double lambert_w_minus1(double y, double tol) {
  if (!(y < 0.0) || !(y > -2.0 * std::exp(-2.0)))
    throw ConfigError("lambert_w_minus1: y must lie in (-2e^-2, 0)");
  const double L = std::log(-1.0 / y);
  // x e^x is strictly decreasing on (-inf,-1), so h(x) = x e^x - y changes
  // sign exactly once; the lemma's bounds -2L < x < -L seed the bracket.
  auto h = [&](double x) { return x * std::exp(x) - y; };
  double lo = -2.0 * L - 1.0, hi = -std::max(L, 1.0);
  while (h(lo) <= 0.0) lo -= 5.0;
  while (h(hi) >= 0.0) hi += 0.5 * (-1.0 - hi);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {
    const double ex = std::exp(x);
    const double step = (x * ex - y) / ((1.0 + x) * ex);
    const double next = x - step;
    if (next > lo && next < hi) x = next;
  }
  // The root is representable only to ulp(x), and d ln|x e^x| / dx ~ 1, so the
  // relative residual cannot beat ~eps |x| however hard the polish works.
  const double floor_rel = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x);
  if (!(std::abs(x * std::exp(x) - y) <= std::max(tol, floor_rel) * std::abs(y)))
    throw PropertyError("lambert_w_minus1: residual above tolerance");
  return x;
}

BalanceSolution solve_balance(const WeightSpec& w, int p, int d) {
  if (d < 4) throw ConfigError("solve_balance: d must be >= 4");
  if (p < 1) throw ConfigError("solve_balance: p must be >= 1");
  const double dp = std::pow(double(d), p);
  const double ln_d = std::log(double(d));
  // g(ln N) = d^p ln(dN) - f(N)/d: positive at N = 1, eventually negative.
  auto g = [&](double lnN) { return dp * (ln_d + lnN) - w.value_ln(lnN) / d; };
  if (!(g(0.0) > 0.0))
    throw ConfigError("solve_balance: no root in bracket (weight too heavy at N = 1)");
  double lo = 0.0, hi = 1.0;
  while (g(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e80) throw ConfigError("solve_balance: no root in bracket");
  }
  for (int it = 0; it < 300 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  BalanceSolution sol;
  sol.ln_N = 0.5 * (lo + hi);
  sol.N = std::exp(sol.ln_N);
  sol.ln_abs_r = 2.0 * dp * (ln_d + sol.ln_N);

  if (w.is_gevrey()) {
    const double theta = std::get<GevreyKind>(w.kind).theta;
    const double y = -theta * std::pow(double(d), -(theta + p + 1.0));
    const double wm1 = lambert_w_minus1(y);
    const double ln_N_cf = -ln_d - wm1 / theta;
    sol.closed_form_N = std::exp(ln_N_cf);
    if (std::abs(ln_N_cf - sol.ln_N) > 1e-6)
      throw PropertyError("solve_balance: closed form and bisection disagree");
  }
  return sol;
}

StabilityPrediction predict_time(const WeightSpec& w, int p, double eps,
                                 const ConstantsLedger& ledger, double eps0) {
  if (!(eps > 0.0)) throw ConfigError("predict_time: eps must be positive");
  if (!(eps < eps0)) throw ConfigError("predict_time: eps must lie below eps0");
  const double ln_eps = std::log(eps);
  BalanceSolution best = solve_balance(w, p, 4);
  if (-best.ln_abs_r < ln_eps)
    throw ConfigError("predict_time: no admissible degree (eps exceeds the d = 4 radius)");
  int best_d = 4;
  for (int d = 5;; ++d) {
    const BalanceSolution sol = solve_balance(w, p, d);
    if (-sol.ln_abs_r < ln_eps) break;
    best = sol;
    best_d = d;
    if (d > 200000) throw ConfigError("predict_time: degree search runaway");
  }
  StabilityPrediction out;
  out.eps = eps;
  out.d = best_d;
  out.N = best.N;
  const double fN = w.value_ln(best.ln_N);
  const double minus_ln_Csta = -std::log(ledger.C_sta);
  out.ln_T = ledger.C_fin * fN + minus_ln_Csta;
  out.ln_T_s = ledger.C_fin * ledger.in.s * fN + minus_ln_Csta;
  out.regime = w.family_name();
  if (w.is_gevrey()) {
    out.a = 1.0 / p;  // boundary of the 1 - ap >= 0 window
  } else {
    out.a = logultra_admissible_a(std::get<LogUltraKind>(w.kind).q, p);
  }
  return out;
}

double default_eps0(const WeightSpec& w, int p, const ConstantsLedger& ledger) {
  const int d_gate = std::max(4, static_cast<int>(std::ceil(ledger.D_fin)));
  // May underflow to 0 for theorem-scale ledgers; desk configs pin eps0.
  return std::exp(-solve_balance(w, p, d_gate).ln_abs_r);
}

double gevrey_order_ratio(const WeightSpec& w, int p, int d) {
  if (!w.is_gevrey()) throw ConfigError("gevrey_order_ratio needs a Gevrey weight");
  const BalanceSolution sol = solve_balance(w, p, d);
  const double fN = w.value_ln(sol.ln_N);
  return fN * std::log(sol.ln_abs_r) / (sol.ln_abs_r * sol.ln_abs_r);
}

}  // namespace nflab
