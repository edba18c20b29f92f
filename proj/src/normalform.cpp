#include "nflab/normalform.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include <nlohmann/json.hpp>

namespace nflab {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}
}  // namespace

const char* to_string(ResonanceClass c) {
  switch (c) {
    case ResonanceClass::R0: return "R0";
    case ResonanceClass::NR0: return "NR0";
    case ResonanceClass::NR1: return "NR1";
    case ResonanceClass::NR21: return "NR21";
    case ResonanceClass::NR22: return "NR22";
    case ResonanceClass::R2: return "R2";
    case ResonanceClass::HIGH: return "HIGH";
  }
  return "?";
}

ResonanceClass classify(const MultiIndex& m, const FrequencyModel& model, double N,
                        const BlockPartition& part) {
  if (!m.momentum_zero())
    throw PropertyError("classify: multi-index violates momentum conservation: " + to_string(m));
  const int s = m.high_count(N);
  if (s >= 3) return ResonanceClass::HIGH;
  if (s == 2) {
    const double n2 = N * N;
    const ModeIndex* h[2];
    int found = 0;
    for (const auto& e : m.entries)
      if (static_cast<double>(e.radius2()) > n2) h[found++] = &e;
    // The block-diagonal test precedes the cancellation test: a paired high
    // pair is both, and belongs to the R2 bucket.
    if (h[0]->sigma * h[1]->sigma == -1 && part.block_of(*h[0]) == part.block_of(*h[1]))
      return ResonanceClass::R2;
    if (zero_divisor(model, m)) return ResonanceClass::R0;
    return h[0]->sigma * h[1]->sigma == +1 ? ResonanceClass::NR21 : ResonanceClass::NR22;
  }
  if (zero_divisor(model, m)) return ResonanceClass::R0;
  return s == 0 ? ResonanceClass::NR0 : ResonanceClass::NR1;
}

Polynomial h0_polynomial(const FrequencyModel& model, double radius_limit) {
  Polynomial h0;
  for (const auto& m : modes_within_radius(model.geom, radius_limit)) {
    if (m.sigma != +1) continue;
    h0.add_term(MultiIndex{m, m.conjugate()},
                std::complex<double>(omega(model, m.j), 0.0));
  }
  return h0;
}

RationalPolynomial h0_polynomial_exact(const FrequencyModel& model, double radius_limit) {
  RationalPolynomial h0;
  for (const auto& m : modes_within_radius(model.geom, radius_limit)) {
    if (m.sigma != +1) continue;
    h0.add_term(MultiIndex{m, m.conjugate()},
                GaussianRational(Rational(omega_int(model, m.j))));
  }
  return h0;
}

int lie_series_length(int k, int d) {
  if (k < 3) throw ConfigError("lie_series_length: k must be >= 3");
  int n = 1;
  while (n * (k - 2) + k <= d) ++n;
  return n;
}

namespace {

// sum over l = start..n of ad_G^{l - start + 1} X / l!, pruned above degree_cap
// each level (brackets only raise degree, so pruning commutes with the tail).
Polynomial lie_series(const Polynomial& X, const Polynomial& G, int start, int n, int degree_cap,
                      std::size_t budget) {
  Polynomial acc;
  Polynomial Y = X;
  for (int l = start; l <= n; ++l) {
    Y = poisson_capped(Y, G, degree_cap, budget).scaled(std::complex<double>(1.0 / l, 0.0));
    if (Y.empty()) break;
    acc += Y;
  }
  return acc;
}

LieParts route_parts(const Polynomial& delta, int d, double N) {
  LieParts out;
  for (const auto& [key, v] : delta.terms) {
    if (key.high_count(N) >= 3)
      out.to_Rgt.terms.emplace(key, v);
    else if (key.degree() > d)
      out.to_Rd.terms.emplace(key, v);
    else
      out.kept.terms.emplace(key, v);
  }
  return out;
}

}  // namespace

LieParts lie_transform_truncated(const Polynomial& X, const Polynomial& G, int n, int d, double N,
                                 int degree_cap, std::size_t budget) {
  return route_parts(lie_series(X, G, 1, n, degree_cap, budget), d, N);
}

NormalFormOutput birkhoff_iterate(const Polynomial& P, const FrequencyModel& model,
                                  const WeightSpec& w, const ConstantsLedger& ledger,
                                  const BirkhoffOptions& opt) {
  const int d = opt.d;
  const double N = opt.N, r = opt.r;
  if (d < 3) throw ConfigError("birkhoff_iterate: d must be >= 3");
  if (!(N >= 1.0) || !(r > 0.0)) throw ConfigError("birkhoff_iterate: need N >= 1 and r > 0");
  if (!P.momentum_conserving())
    throw PropertyError("birkhoff_iterate: perturbation violates momentum conservation");
  if (!P.empty() && P.min_degree() < 3)
    throw PropertyError("birkhoff_iterate: perturbation must start at degree 3");
  const int cap = opt.remainder_degree_cap > 0 ? opt.remainder_degree_cap : d + 3;
  if (cap < d) throw ConfigError("birkhoff_iterate: remainder cap below d");
  if (P.max_degree() > cap)
    throw ConfigError("birkhoff_iterate: input degree exceeds the remainder cap");

  NormalFormOutput out;
  out.d = d;
  out.N = N;
  out.r = r;
  out.gate_ln = ledger.ln_gate(r, d, N);
  out.gate_ok = out.gate_ln < 0.0;
  if (!out.gate_ok && !opt.override_gate)
    throw PropertyError("birkhoff_iterate: smallness gate fails (ln gate = " +
                        std::to_string(out.gate_ln) + "); set override_gate for desk runs");

  auto [le2high, high3] = project_high_modes(P, N, 3);
  out.R_high = std::move(high3);
  auto [pool, overflow] = project_high_degree(le2high, d);
  out.R_poly = std::move(overflow);
  Polynomial Zacc;

  const double lnCdN = std::log(ledger.C_deno * d * N);
  const double dp = std::pow(double(d), ledger.in.p);
  const double E = ledger.E(d);
  const double fN = w.value(std::max(N, 1.0));
  const double tail_rate = (w.s - w.s0) * fN;

  out.ln_Rd_bound = (d - 2) * std::log(r) + ledger.C_exp * dp * d * std::log(ledger.C_rema * d * N);
  double lnB = out.R_high.empty() ? kNegInf : std::log(cutting_bound(out.R_high, r, N, w));

  for (int k = 3; k <= d; ++k) {
    StepTrace t;
    t.k = k;
    t.r_k = d == 3 ? 2.0 * r : 2.0 * r - (k - 3) * r / double(d - 3);
    t.E = E;
    t.n_lie = lie_series_length(k, d);
    t.ln_P_bound =
        (2 * k - 7) * std::log(double(d)) + (k - 2) * std::log(ledger.C_estP * r) +
        ledger.C_exp * (k - 3) * dp * lnCdN;
    t.ln_G_bound = t.ln_P_bound - ledger.ln_divisor_floor(d, N);
    t.G_small = t.ln_G_bound <= std::log(E);
    t.ln_Rd_step = t.ln_P_bound + t.n_lie * (t.ln_G_bound - std::log(2.0 * E)) -
                   std::lgamma(double(t.n_lie) + 1.0);

    auto split = solve_homological(pool, model, N, ledger, d, opt.part);
    for (const auto& [key, c] : split.Z.terms)
      (classify(key, model, N, opt.part) == ResonanceClass::R2 ? out.Zgt : out.Z0).add_term(key, c);
    t.z_terms = split.Z.term_count();
    t.g_terms = split.G.term_count();
    out.generators.push_back(split.G);

    Polynomial newpool;
    if (!split.G.empty()) {
      const Polynomial X0 = split.Z - pool;  // ad_G H0 from the homological identity
      Polynomial delta = lie_series(Zacc, split.G, 1, t.n_lie, cap, opt.term_budget);
      delta += lie_series(pool, split.G, 1, t.n_lie, cap, opt.term_budget);
      delta += lie_series(X0, split.G, 2, t.n_lie, cap, opt.term_budget);
      delta += lie_series(out.R_poly, split.G, 1, t.n_lie, cap, opt.term_budget);
      delta += lie_series(out.R_high, split.G, 1, t.n_lie, cap, opt.term_budget);
      LieParts routed = route_parts(delta, d, N);
      newpool = std::move(routed.kept);
      out.R_poly += routed.to_Rd;
      out.R_high += routed.to_Rgt;
    }
    Zacc += split.Z;
    pool = std::move(newpool);
    t.p_terms = pool.term_count();

    lnB = log_sum(std::log1p(E) + lnB, t.ln_P_bound + d * std::log(2.0) - tail_rate);
    out.trace.push_back(t);
  }
  if (!pool.empty())
    throw PropertyError("birkhoff_iterate: nonresonant terms of degree <= d survived the last step");
  out.ln_Rgt_bound = lnB;

  if (!opt.explicit_remainders) {
    out.R_poly = Polynomial{};
    out.R_high = Polynomial{};
  }
  return out;
}

std::string normal_form_to_json(const NormalFormOutput& nf, int dim) {
  nlohmann::json j;
  j["d"] = nf.d;
  j["N"] = nf.N;
  j["r"] = nf.r;
  j["gate_ln"] = nf.gate_ln;
  j["gate_ok"] = nf.gate_ok;
  j["ln_Rd_bound"] = nf.ln_Rd_bound;
  j["ln_Rgt_bound"] = nf.ln_Rgt_bound;
  j["Z0"] = nlohmann::json::parse(polynomial_to_json(nf.Z0, dim));
  j["Zgt"] = nlohmann::json::parse(polynomial_to_json(nf.Zgt, dim));
  j["R_poly"] = nlohmann::json::parse(polynomial_to_json(nf.R_poly, dim));
  j["R_high"] = nlohmann::json::parse(polynomial_to_json(nf.R_high, dim));
  nlohmann::json gens = nlohmann::json::array();
  for (const auto& g : nf.generators)
    gens.push_back(nlohmann::json::parse(polynomial_to_json(g, dim)));
  j["generators"] = std::move(gens);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& t : nf.trace) {
    nlohmann::json row;
    row["k"] = t.k;
    row["r_k"] = t.r_k;
    row["n_lie"] = t.n_lie;
    row["E"] = t.E;
    row["ln_P_bound"] = t.ln_P_bound;
    row["ln_G_bound"] = t.ln_G_bound;
    row["G_small"] = t.G_small;
    row["ln_Rd_step"] = t.ln_Rd_step;
    row["z_terms"] = t.z_terms;
    row["g_terms"] = t.g_terms;
    row["p_terms"] = t.p_terms;
    rows.push_back(std::move(row));
  }
  j["trace"] = std::move(rows);
  return j.dump(1);
}

}  // namespace nflab
