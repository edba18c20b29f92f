#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nflab/errors.hpp>
#include <nflab/normalform.hpp>
#include <nflab/rng.hpp>

#include <cmath>
#include <complex>
#include <string>

using namespace nflab;
using C = std::complex<double>;

namespace {

const LatticeGeometry kGeom{1, 16, 2.0};
const BlockPartition kPart{2.0, 1.0};

RationalPolynomial quantize(const Polynomial& P) {
  RationalPolynomial out;
  for (const auto& [k, v] : P.terms) {
    GaussianRational c{Rational(std::llround(4.0 * v.real()), 4),
                       Rational(std::llround(4.0 * v.imag()), 4)};
    if (!c.is_zero()) out.terms.emplace(k, c);
  }
  return out;
}

}  // namespace

TEST_CASE("classification flowchart on the integer model, N = 3") {
  const FrequencyModel m = make_convnls(kGeom);
  auto cls = [&](const MultiIndex& k) { return classify(k, m, 3.0, kPart); };

  // no high modes: paired -> R0
  CHECK(cls(MultiIndex{mode(1, +1), mode(1, -1)}) == ResonanceClass::R0);
  // no high modes, unpaired, divisor exactly zero (omega_0 = 0) -> R0
  CHECK(cls(MultiIndex{mode(1, +1), mode(1, -1), mode(0, +1)}) == ResonanceClass::R0);
  // no high modes, nonzero divisor -> NR0
  CHECK(cls(MultiIndex{mode(2, +1), mode(1, -1), mode(1, -1)}) == ResonanceClass::NR0);
  // one high mode -> NR1
  CHECK(cls(MultiIndex{mode(4, +1), mode(2, -1), mode(1, -1), mode(1, -1)}) ==
        ResonanceClass::NR1);
  // two high, opposite signs, same shell -> R2 (before the pairing test)
  CHECK(cls(MultiIndex{mode(4, +1), mode(4, -1), mode(1, +1), mode(1, -1)}) ==
        ResonanceClass::R2);
  // two high, opposite signs, different shells -> NR22
  CHECK(cls(MultiIndex{mode(5, +1), mode(4, -1), mode(1, -1)}) == ResonanceClass::NR22);
  // two high, equal signs -> NR21
  CHECK(cls(MultiIndex{mode(4, +1), mode(4, +1), mode(3, -1), mode(3, -1), mode(2, -1)}) ==
        ResonanceClass::NR21);
  // three or more high modes -> HIGH, even when paired
  CHECK(cls(MultiIndex{mode(4, +1), mode(4, -1), mode(5, +1), mode(5, -1)}) ==
        ResonanceClass::HIGH);

  CHECK(std::string(to_string(ResonanceClass::R2)) == "R2");
  CHECK(is_resonant(ResonanceClass::R0));
  CHECK(is_resonant(ResonanceClass::R2));
  CHECK_FALSE(is_resonant(ResonanceClass::NR21));
}

TEST_CASE("diagonal quadratic assembly matches the bracket shortcut") {
  const FrequencyModel m = make_convnls(kGeom);
  const Polynomial H0 = h0_polynomial(m, 4.0);
  // omega_0 = 0 contributes nothing; sites +-1..+-4 remain
  CHECK(H0.term_count() == 8);
  CHECK(H0.coefficient(MultiIndex{mode(3, +1), mode(3, -1)}) == C(9.0, 0.0));

  const Polynomial Q = random_real_polynomial(kGeom, 4.0, 3, 4, 1.0, 33);
  const Polynomial direct = poisson(H0, Q);
  const Polynomial diag = h0_bracket(m, Q);
  Polynomial diff = direct;
  diff -= diag;
  CHECK(max_stored_coeff(diff) < 1e-12);

  // exact mirror agrees with the double path
  const RationalPolynomial H0x = h0_polynomial_exact(m, 4.0);
  for (const auto& [k, v] : H0x.terms)
    CHECK(v.re.to_double() == H0.coefficient(k).real());
}

TEST_CASE("homological solve: explicit generator on a single monomial") {
  const FrequencyModel m = make_convnls(kGeom);
  const ConstantsLedger led = build_ledger(LedgerInputs{});
  Polynomial P;
  const MultiIndex key{mode(2, +1), mode(1, -1), mode(1, -1)};  // Omega = 2
  P.add_term(key, C(1.0, 0.0));

  const auto split = solve_homological(P, m, 3.0, led, 3, kPart);
  CHECK(split.Z.empty());
  CHECK(split.G.term_count() == 1);
  CHECK(std::abs(split.G.coefficient(key) - C(0.0, 0.5)) < 1e-15);  // i P / Omega
  CHECK(split.min_abs_divisor == doctest::Approx(2.0));
  CHECK(split.ln_gain == doctest::Approx(-led.ln_divisor_floor(3, 3.0)));

  // {H0, G} + P = Z, coefficient-exactly
  Polynomial resid = h0_bracket(m, split.G);
  resid += P;
  resid -= split.Z;
  CHECK(max_stored_coeff(resid) < 1e-15);
}

TEST_CASE("homological solve is exact over rationals and classifies its Z") {
  const FrequencyModel m = make_convnls(kGeom);
  const ConstantsLedger led = build_ledger(LedgerInputs{});
  for (std::uint64_t seed : {3ULL, 8ULL, 15ULL}) {
    const RationalPolynomial P =
        quantize(random_real_polynomial(kGeom, 3.0, 3, 4, 1.0, 600 + seed));
    const auto split = solve_homological(P, m, 3.0, led, 4, kPart);

    RationalPolynomial resid = h0_bracket(m, split.G);
    resid += P;
    resid -= split.Z;
    CHECK(resid.empty());  // exact identity, no tolerance

    for (const auto& [k, v] : split.Z.terms) {
      const auto c = classify(k, m, 3.0, kPart);
      CHECK((c == ResonanceClass::R0 || c == ResonanceClass::R2));
    }
    for (const auto& [k, v] : split.G.terms)
      CHECK_FALSE(is_resonant(classify(k, m, 3.0, kPart)));
  }
}

TEST_CASE("homological solve rejects monomials with three high modes") {
  const FrequencyModel m = make_convnls(kGeom);
  const ConstantsLedger led = build_ledger(LedgerInputs{});
  Polynomial P;
  P.add_term(MultiIndex{mode(4, +1), mode(4, +1), mode(4, +1), mode(12, -1)}, C(1.0, 0.0));
  CHECK_THROWS_AS((void)solve_homological(P, m, 3.0, led, 4, kPart), PropertyError);
}

TEST_CASE("lie series length: minimal n with n(k-2)+k > d") {
  CHECK(lie_series_length(3, 5) == 3);
  CHECK(lie_series_length(4, 5) == 1);
  CHECK(lie_series_length(3, 9) == 7);
  CHECK(lie_series_length(5, 9) == 2);
  CHECK(lie_series_length(6, 5) == 1);  // already past d: single bracket suffices
}

TEST_CASE("truncated lie transform routes every bracket term exactly once") {
  const FrequencyModel m = make_convnls(kGeom);
  const Polynomial X = random_real_polynomial(kGeom, 4.0, 3, 4, 1.0, 71);
  const Polynomial G = random_real_polynomial(kGeom, 4.0, 3, 3, 0.5, 72);
  const int n = 2, d = 6, cap = 9;
  const double N = 3.0;

  const LieParts parts = lie_transform_truncated(X, G, n, d, N, cap);

  // reference: delta = {X,G} + {{X,G},G}/2, pruned above the cap
  Polynomial l1 = poisson_capped(X, G, cap);
  Polynomial l2 = poisson_capped(l1, G, cap).scaled(C(0.5, 0.0));
  Polynomial full = l1;
  full += l2;

  Polynomial sum = parts.kept;
  sum += parts.to_Rd;
  sum += parts.to_Rgt;
  sum -= full;
  CHECK(max_stored_coeff(sum) < 1e-13);

  for (const auto& [k, v] : parts.kept.terms) {
    CHECK(k.degree() <= d);
    CHECK(k.high_count(N) < 3);
  }
  for (const auto& [k, v] : parts.to_Rd.terms) {
    CHECK(k.degree() > d);
    CHECK(k.degree() <= cap);
    CHECK(k.high_count(N) < 3);
  }
  for (const auto& [k, v] : parts.to_Rgt.terms) CHECK(k.high_count(N) >= 3);
}

TEST_CASE("normal form iteration: structure, routing, and the gate") {
  const LatticeGeometry geom{1, 4, 2.0};
  const FrequencyModel m = make_convnls(geom);
  const WeightSpec w = make_gevrey(0.5, 10.0, geom);
  const ConstantsLedger led = build_ledger(w, LedgerInputs{.C_P = 1e-3});
  const Polynomial P = random_real_polynomial(geom, 3.0, 3, 3, 1e-3, 91);

  BirkhoffOptions opt;
  opt.d = 5;
  opt.N = 3.0;
  opt.r = 1e-3;
  opt.part = kPart;

  // the desk-scale gate fails honestly; the error names the override
  try {
    (void)birkhoff_iterate(P, m, w, led, opt);
    FAIL("expected the smallness gate to reject desk-scale inputs");
  } catch (const PropertyError& e) {
    CHECK(std::string(e.what()).find("override_gate") != std::string::npos);
  }

  opt.override_gate = true;
  const NormalFormOutput nf = birkhoff_iterate(P, m, w, led, opt);

  CHECK_FALSE(nf.gate_ok);
  CHECK(nf.gate_ln > 0.0);
  CHECK(nf.d == 5);
  CHECK(nf.trace.size() == 3);  // k = 3, 4, 5
  CHECK(nf.generators.size() == nf.trace.size());

  for (const auto& [k, v] : nf.Z0.terms)
    CHECK(classify(k, m, opt.N, kPart) == ResonanceClass::R0);
  for (const auto& [k, v] : nf.Zgt.terms)
    CHECK(classify(k, m, opt.N, kPart) == ResonanceClass::R2);
  if (!nf.R_poly.empty()) CHECK(nf.R_poly.min_degree() > opt.d);
  for (const auto& [k, v] : nf.R_high.terms) CHECK(k.high_count(opt.N) >= 3);

  // all parts are momentum-conserving and real up to bracket roundoff
  // (is_real() compares exactly, so probe the conjugation defect instead)
  for (const Polynomial* Q : {&nf.Z0, &nf.Zgt, &nf.R_poly, &nf.R_high}) {
    CHECK(Q->momentum_conserving());
    double defect = 0.0;
    for (const auto& [k, v] : Q->terms)
      defect = std::max(defect, std::abs(Q->coefficient(k.conjugate()) - std::conj(v)));
    CHECK(defect < 1e-12 * std::max(1.0, max_stored_coeff(*Q)));
  }

  int expected_k = 3;
  for (const auto& row : nf.trace) {
    CHECK(row.k == expected_k++);
    CHECK(row.n_lie == lie_series_length(row.k, opt.d));
    CHECK(row.E == doctest::Approx(1.0 / (16.0 * std::exp(1.0) * opt.d)));
    CHECK(row.ln_G_bound == doctest::Approx(row.ln_P_bound - led.ln_divisor_floor(opt.d, opt.N)));
  }
  // the bound chain grows with k at fixed desk inputs
  CHECK(nf.trace.front().ln_P_bound < nf.trace.back().ln_P_bound);

  // serialized form is valid JSON with the advertised top-level keys
  const std::string js = normal_form_to_json(nf, geom.dim);
  CHECK(js.find("\"Z0\"") != std::string::npos);
  CHECK(js.find("\"generators\"") != std::string::npos);
  CHECK(js.find("\"gate_ok\"") != std::string::npos);
}

TEST_CASE("normal form iteration empties the solvable pool") {
  // With d = 3 and a cubic perturbation, one step must clear everything:
  // the residual low-degree pool is empty and only remainders survive.
  const LatticeGeometry geom{1, 4, 2.0};
  const FrequencyModel m = make_convnls(geom);
  const WeightSpec w = make_gevrey(0.5, 10.0, geom);
  const ConstantsLedger led = build_ledger(w, LedgerInputs{.C_P = 1e-3});
  const Polynomial P = random_real_polynomial(geom, 3.0, 3, 3, 1e-3, 92);

  BirkhoffOptions opt;
  opt.d = 4;
  opt.N = 3.0;
  opt.r = 1e-3;
  opt.part = kPart;
  opt.override_gate = true;
  const NormalFormOutput nf = birkhoff_iterate(P, m, w, led, opt);
  REQUIRE_FALSE(nf.trace.empty());
  CHECK(nf.trace.back().p_terms == 0);

  // Z0 is the kernel of the diagonal bracket: every key has exact divisor 0
  for (const auto& [k, v] : nf.Z0.terms) CHECK(divisor_int(m, k) == 0);
}
