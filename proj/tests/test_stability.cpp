#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nflab/errors.hpp>
#include <nflab/stability.hpp>

#include <cmath>

using namespace nflab;

namespace {
const LatticeGeometry kGeom{1, 16, 2.0};
const double kE = std::exp(1.0);
}  // namespace

TEST_CASE("ledger constants from the default inputs") {
  const ConstantsLedger led = build_ledger(LedgerInputs{});
  // C0 = 2, C2 = 1/2, beta = 2, delta = 1, tau = 1, gamma = 1/2, p = 1, C_P = 1
  CHECK(led.C_sep == doctest::Approx(2.0));                       // C0^(2/beta)
  CHECK(led.C_deno == doctest::Approx(64.0));                     // (4 + 4)^2
  CHECK(led.C_exp == doctest::Approx(4.0));                       // 1*(1+2)+1
  CHECK(led.C_estP == doctest::Approx(128.0 * kE * kE));          // 64 e^2 / gamma
  CHECK(led.C_fin == doctest::Approx(32.0));                      // 2^{p+2} C_exp
  CHECK(led.C_rema == doctest::Approx(led.C_estP));               // C_estP dominates
  CHECK(led.D_fin == doctest::Approx(4.0 * led.C_rema));
  CHECK(led.C_thre == doctest::Approx(led.C_estP * 16.0 * kE / 0.5));
  CHECK(led.S_fin == doctest::Approx(0.1 + 32.0));
  CHECK(led.C_sta == doctest::Approx(std::exp(-1.0)));  // s Cf f(C1) = 1/2

  CHECK(led.E(5) == doctest::Approx(1.0 / (16.0 * kE * 5.0)));
  CHECK(led.ln_divisor_floor(3, 3.0) ==
        doctest::Approx(std::log(0.5) - 4.0 * 3.0 * std::log(64.0 * 3.0 * 3.0)));
  CHECK(led.ln_gate(1e-3, 5, 3.0) ==
        doctest::Approx(std::log(1e-3 * 25.0 * led.C_thre) +
                        4.0 * 5.0 * std::log(64.0 * 5.0 * 3.0)));
}

TEST_CASE("ledger validation and weight-coupled construction") {
  LedgerInputs bad;
  bad.C0 = 0.5;
  CHECK_THROWS_AS((void)build_ledger(bad), ConfigError);
  LedgerInputs badg;
  badg.gamma = 0.0;
  CHECK_THROWS_AS((void)build_ledger(badg), ConfigError);

  const WeightSpec w = make_gevrey(0.5, 10.0, kGeom);
  LedgerInputs partial;
  partial.C_P = 1e-3;
  const ConstantsLedger led = build_ledger(w, partial);
  CHECK(led.in.s == doctest::Approx(w.s));
  CHECK(led.in.Cf == doctest::Approx(w.Cf));
  CHECK(led.in.s0 == doctest::Approx(w.s0));
  // shell thickness is a length, not a mode: f is taken at C1 = 1 directly
  CHECK(led.in.f_C1 == doctest::Approx(1.0));
  CHECK(led.C_sta == doctest::Approx(std::exp(-2.0 * 10.0 * w.Cf)));
}

TEST_CASE("lambert branch -1: residual, bracketing, domain") {
  for (double y : {-0.05, -0.001, -1e-8, -0.27, -2.0 * std::exp(-2.0) * 0.999}) {
    const double x = lambert_w_minus1(y);
    CHECK(x < -1.0);
    CHECK(std::abs(x * std::exp(x) - y) <= 1e-12 * std::abs(y));
    if (y > -0.1) {  // two-sided seed bound holds away from the branch point
      CHECK(-x > std::log(-1.0 / y));
      CHECK(-x < 2.0 * std::log(-1.0 / y));
    }
  }
  CHECK(lambert_w_minus1(-0.05) == doctest::Approx(-4.49975).epsilon(1e-4));
  CHECK_THROWS_AS((void)lambert_w_minus1(0.0), ConfigError);
  CHECK_THROWS_AS((void)lambert_w_minus1(0.01), ConfigError);
  CHECK_THROWS_AS((void)lambert_w_minus1(-0.3), ConfigError);  // past -2e^{-2}
}

TEST_CASE("balance equation: gevrey solutions satisfy d^p ln(dN) = f(N)/d") {
  const WeightSpec w = make_gevrey(0.5, 10.0, kGeom);
  for (int d : {4, 5, 10, 20, 50}) {
    const BalanceSolution b = solve_balance(w, 1, d);
    CHECK(b.N > 1.0);
    const double lhs = double(d) * std::log(double(d) * b.N);
    const double rhs = std::sqrt(b.N) / double(d);
    CHECK(std::abs(lhs - rhs) <= 1e-8 * rhs);
    CHECK(b.ln_abs_r == doctest::Approx(2.0 * double(d) * std::log(double(d) * b.N)));
    CHECK(b.ln_N == doctest::Approx(std::log(b.N)));
    // closed-form Lambert solution agrees to the library's own 1e-6 contract
    CHECK(std::abs(b.closed_form_N - b.N) <= 2e-6 * b.N);
  }
  // frozen reference points
  CHECK(solve_balance(w, 1, 5).N == doctest::Approx(109048.2858706).epsilon(1e-6));
  CHECK(solve_balance(w, 1, 10).N == doctest::Approx(2959468.3123990).epsilon(1e-6));
  CHECK(solve_balance(w, 1, 20).N == doctest::Approx(71063680.8223730).epsilon(1e-6));
  CHECK(solve_balance(w, 1, 10).ln_abs_r == doctest::Approx(344.0621055794).epsilon(1e-9));
}

TEST_CASE("balance equation: logultra cutoffs sit in the ln N sandwich") {
  const WeightSpec w = make_logultra(2.0, 40.0, kGeom);
  for (int d : {4, 6, 8, 12}) {
    const BalanceSolution b = solve_balance(w, 1, d);
    const double lhs = double(d) * std::log(double(d) * b.N);
    const double fN = std::pow(std::log(b.N + std::exp(2.0)), 2.0);
    CHECK(std::abs(lhs - fN / d) <= 1e-8 * lhs);
    // q = 2, p = 1: ln N ~ d^2 up to logarithmic corrections
    CHECK(b.ln_N >= double(d) * double(d) * 0.9);
    CHECK(b.ln_N <= double(d) * double(d) * (1.0 + std::log(double(d))) * 1.1);
    CHECK(b.closed_form_N == 0.0);  // Lambert form is Gevrey-only
  }
}

TEST_CASE("stability prediction picks the largest admissible degree") {
  const WeightSpec w = make_gevrey(0.5, 10.0, kGeom);
  LedgerInputs partial;
  partial.C_P = 1e-3;
  const ConstantsLedger led = build_ledger(w, partial);
  const double eps0 = 1e-40;

  const StabilityPrediction pred = predict_time(w, 1, 1e-45, led, eps0);
  CHECK(pred.d >= 4);
  CHECK(pred.regime == "gevrey");
  // d is maximal: the next degree's balanced radius underruns eps
  const double lneps = std::log(1e-45);
  CHECK(solve_balance(w, 1, pred.d).ln_abs_r <= -lneps);
  CHECK(solve_balance(w, 1, pred.d + 1).ln_abs_r > -lneps);
  // horizon exponent recomputed from first principles
  const double expect_lnT =
      led.C_fin * std::sqrt(pred.N) - std::log(led.C_sta);
  CHECK(pred.ln_T == doctest::Approx(expect_lnT));
  CHECK(pred.ln_T_s == doctest::Approx(led.C_fin * w.s * std::sqrt(pred.N) -
                                       std::log(led.C_sta)));
  CHECK(pred.ln_T > 0.0);

  // smaller eps admits deeper degrees and longer horizons
  const StabilityPrediction deeper = predict_time(w, 1, 1e-60, led, eps0);
  CHECK(deeper.d > pred.d);
  CHECK(deeper.ln_T > pred.ln_T);

  CHECK_THROWS_AS((void)predict_time(w, 1, 1e-30, led, eps0), ConfigError);  // eps >= eps0
  CHECK_THROWS_AS((void)predict_time(w, 1, 1e-39, led, 1e-38), ConfigError);  // no d >= 4
}

TEST_CASE("logultra predictions report the admissible exponent") {
  const WeightSpec w = make_logultra(2.0, 40.0, kGeom);
  LedgerInputs partial;
  partial.C_P = 1e-3;
  const ConstantsLedger led = build_ledger(w, partial);
  // |ln r(4)| ~ 139 for q = 2, so eps must undercut e^{-139}
  const StabilityPrediction pred = predict_time(w, 1, 1e-65, led, 1e-50);
  CHECK(pred.regime == "logultra");
  CHECK(pred.a == doctest::Approx(1.0 / 3.0));
  CHECK(logultra_admissible_a(2.0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(logultra_admissible_a(3.0, 2) == doctest::Approx(2.0 / 7.0));
}

TEST_CASE("default eps threshold underflows honestly at desk ledgers") {
  // The gate degree ceil(D_fin) >= 473 puts |ln r| in the tens of thousands;
  // the balanced radius is a true double underflow, so every desk eps is
  // rejected unless the config overrides eps0.
  const WeightSpec w = make_gevrey(0.5, 10.0, kGeom);
  const ConstantsLedger led = build_ledger(w, LedgerInputs{});
  const double eps0 = default_eps0(w, 1, led);
  CHECK(eps0 == 0.0);
  CHECK_THROWS_AS((void)predict_time(w, 1, 1e-45, led, eps0), ConfigError);
}

TEST_CASE("gevrey order diagnostic is slowly varying in d") {
  const WeightSpec w = make_gevrey(0.5, 10.0, kGeom);
  const double r40 = gevrey_order_ratio(w, 1, 40);
  const double r80 = gevrey_order_ratio(w, 1, 80);
  CHECK(r40 > 0.0);
  CHECK(r80 > 0.0);
  CHECK(std::abs(r40 - r80) / r40 < 0.25);
}
