#include "nflab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nflab/errors.hpp"
#include "nflab/rng.hpp"

namespace nflab {

namespace {

void validate_nr(const NonResonanceParams& nr) {
  if (nr.beta <= 1.0) throw ConfigError("growth exponent beta must exceed 1");
  if (nr.C0 <= 0 || nr.C2 <= 0 || nr.delta <= 0 || nr.tau <= 0 || nr.gamma <= 0)
    throw ConfigError("non-resonance parameters must be positive");
  if (nr.p < 1) throw ConfigError("non-resonance exponent p must be >= 1");
}

double quad_form(const BeamKind& b, const JVec& j) {
  double acc = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) acc += b.g[a][c] * static_cast<double>(j[a]) * static_cast<double>(j[c]);
  return acc;
}

}  // namespace

std::string FrequencyModel::family_name() const {
  if (is_convnls()) return "convnls";
  if (is_fractional()) return "fractional";
  return "beam";
}

FrequencyModel make_convnls(LatticeGeometry geom, std::map<JVec, double> V, double n) {
  FrequencyModel m;
  m.kind = ConvNLSKind{std::move(V), n};
  m.geom = geom;
  m.nr = NonResonanceParams{2.0, 2.0, 1.0, 0.5, 1.0, 0.5, 1};
  validate_nr(m.nr);
  return m;
}

FrequencyModel make_fractional(LatticeGeometry geom, double eta, double m_mass) {
  if (eta <= 0.5 || eta >= 1.0)
    throw ConfigError("fractional exponent eta must lie in (1/2, 1)");
  if (m_mass <= 0) throw ConfigError("fractional mass must be positive");
  FrequencyModel m;
  m.kind = FractionalKind{eta, m_mass};
  m.geom = geom;
  m.nr = NonResonanceParams{2 * eta, 2.0, 2 * eta - 1, 0.5, 1.0, 0.5, 3};
  validate_nr(m.nr);
  return m;
}

FrequencyModel make_beam(LatticeGeometry geom, const std::array<std::array<double, 3>, 3>& g,
                         double m_mass) {
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c)
      if (g[a][c] != g[c][a]) throw ConfigError("beam form must be symmetric");
  if (m_mass < 0) throw ConfigError("beam mass must be nonnegative");
  FrequencyModel m;
  m.kind = BeamKind{g, m_mass};
  m.geom = geom;
  // A few plausibility checks in place of positive definiteness over Z^dim.
  for (int a = 0; a < geom.dim; ++a)
    if (g[a][a] <= 0) throw ConfigError("beam form must be positive on axes");
  m.nr = NonResonanceParams{2.0, 2.0, 1.0, 0.5, 1.0, 0.5, 3};
  validate_nr(m.nr);
  return m;
}

double omega(const FrequencyModel& model, const JVec& j) {
  const ModeIndex m{j, +1};
  if (auto* c = std::get_if<ConvNLSKind>(&model.kind)) {
    double v = 0.0;
    if (auto it = c->V.find(j); it != c->V.end()) v = it->second;
    return static_cast<double>(m.radius2()) + v;
  }
  if (auto* f = std::get_if<FractionalKind>(&model.kind))
    return std::pow(static_cast<double>(m.radius2()) + f->m, f->eta);
  const auto& b = std::get<BeamKind>(model.kind);
  const double q = quad_form(b, j);
  return std::sqrt(q * q + b.m);
}

long long omega_int(const FrequencyModel& model, const JVec& j) {
  if (!model.exact_integer())
    throw PropertyError("integer frequencies require the potential-free convolution model");
  return ModeIndex{j, +1}.radius2();
}

double divisor(const FrequencyModel& model, const MultiIndex& m) {
  double acc = 0.0;
  for (const auto& e : m.entries) acc += e.sigma * omega(model, e.j);
  return acc;
}

long long divisor_int(const FrequencyModel& model, const MultiIndex& m) {
  long long acc = 0;
  for (const auto& e : m.entries) acc += e.sigma * omega_int(model, e.j);
  return acc;
}

bool zero_divisor(const FrequencyModel& model, const MultiIndex& m) {
  if (m.is_paired()) return true;
  if (model.exact_integer()) return divisor_int(model, m) == 0;
  // Structural cancellation: group entries by the invariant their frequency
  // actually depends on and require the signed counts to vanish groupwise.
  if (model.is_fractional()) {
    std::map<long long, int> sig;
    for (const auto& e : m.entries) sig[e.radius2()] += e.sigma;
    for (const auto& [k, s] : sig)
      if (s != 0) return false;
    return true;
  }
  if (model.is_beam()) {
    // Key on the evaluated form; identical site products give identical
    // doubles, so this is an exact grouping, not a tolerance test.
    const auto& b = std::get<BeamKind>(model.kind);
    std::map<double, int> sig;
    for (const auto& e : m.entries) sig[quad_form(b, e.j)] += e.sigma;
    for (const auto& [k, s] : sig)
      if (s != 0) return false;
    return true;
  }
  // ConvNLS with an even potential: omega depends on the +-j orbit.
  std::map<JVec, int> sig;
  for (const auto& e : m.entries) {
    JVec neg{-e.j[0], -e.j[1], -e.j[2]};
    sig[std::max(e.j, neg)] += e.sigma;
  }
  for (const auto& [k, s] : sig)
    if (s != 0) return false;
  return true;
}

std::map<JVec, double> sample_potential(const LatticeGeometry& geom, double n,
                                        std::uint64_t seed) {
  Rng rng(seed);
  std::map<JVec, double> V;
  for (const auto& site : enumerate_sites(geom)) {
    JVec neg{-site[0], -site[1], -site[2]};
    if (site < neg) continue;  // draw once per orbit
    const double r = ModeIndex{site, +1}.radius();
    const double scale = std::pow(std::max(r, 1.0), -n);
    const double v = rng.uniform(-0.5, 0.5) * scale;
    V[site] = v;
    V[neg] = v;
  }
  return V;
}

GrowthReport check_A1(const FrequencyModel& model, double j_min, int k_max) {
  GrowthReport rep;
  rep.worst_low = std::numeric_limits<double>::infinity();
  rep.worst_high = 0.0;
  LatticeGeometry g = model.geom;
  g.k_max = k_max;
  bool any = false;
  for (const auto& site : enumerate_sites(g)) {
    const double r = ModeIndex{site, +1}.radius();
    if (r < j_min || r <= 0) continue;
    any = true;
    const double ratio = omega(model, site) / std::pow(r, model.nr.beta);
    if (ratio < rep.worst_low) {
      rep.worst_low = ratio;
      if (ratio < 1.0 / model.nr.C0) rep.witness = site;
    }
    if (ratio > rep.worst_high) {
      rep.worst_high = ratio;
      if (ratio > model.nr.C0) rep.witness = site;
    }
  }
  if (!any) {
    rep.pass = false;
    rep.note = "empty scan range";
    return rep;
  }
  rep.pass = rep.worst_low >= 1.0 / model.nr.C0 && rep.worst_high <= model.nr.C0;
  return rep;
}

SeparationReport check_A3(const FrequencyModel& model, const BlockPartition& part, int k_max) {
  SeparationReport rep;
  rep.max_admissible_C2 = std::numeric_limits<double>::infinity();
  LatticeGeometry g = model.geom;
  g.k_max = k_max;
  const auto sites = enumerate_sites(g);
  const double k2 = static_cast<double>(k_max) * k_max;
  for (std::size_t a = 0; a < sites.size(); ++a) {
    const ModeIndex ma{sites[a], +1};
    if (static_cast<double>(ma.radius2()) > k2) continue;
    for (std::size_t b = a + 1; b < sites.size(); ++b) {
      const ModeIndex mb{sites[b], +1};
      if (static_cast<double>(mb.radius2()) > k2) continue;
      if (part.block_of(ma) == part.block_of(mb)) continue;
      ++rep.pairs_checked;
      const double sep = std::abs(omega(model, sites[a]) - omega(model, sites[b]));
      const double scale =
          std::pow(ma.radius(), model.nr.delta) + std::pow(mb.radius(), model.nr.delta);
      const double admissible = sep / scale;
      if (admissible < rep.max_admissible_C2) {
        rep.max_admissible_C2 = admissible;
        rep.witness_a = sites[a];
        rep.witness_b = sites[b];
      }
    }
  }
  rep.pass = rep.pairs_checked > 0 && rep.max_admissible_C2 >= model.nr.C2;
  return rep;
}

DivisorScan min_denominator(const FrequencyModel& model, double N, int d_min, int d_max,
                            std::size_t budget, bool strict_radius) {
  if (d_min < 2 || d_max < d_min) throw ConfigError("denominator scan needs 2 <= d_min <= d_max");
  const auto modes = modes_within_radius(model.geom, N, strict_radius);
  double total = 0.0;
  for (int d = d_min; d <= d_max; ++d) total += multiset_count(modes.size(), d);
  if (total > static_cast<double>(budget))
    throw BudgetError("denominator scan would enumerate " + std::to_string(total) + " multisets");

  DivisorScan scan;
  scan.integer_valued = model.exact_integer();
  scan.min_nonzero = std::numeric_limits<double>::infinity();
  for (int d = d_min; d <= d_max; ++d) {
    enumerate_multisets(modes, d, [&](const MultiIndex& m) {
      if (!m.momentum_zero()) return;
      ++scan.scanned;
      if (zero_divisor(model, m)) {
        if (!m.is_paired() && scan.zero_witnesses.size() < 16) scan.zero_witnesses.push_back(m);
        return;
      }
      const double v = scan.integer_valued ? std::abs(static_cast<double>(divisor_int(model, m)))
                                           : std::abs(divisor(model, m));
      if (v < scan.min_nonzero) {
        scan.min_nonzero = v;
        scan.argmin = m;
      }
    });
  }
  if (!std::isfinite(scan.min_nonzero)) scan.min_nonzero = 0.0;
  return scan;
}

A2BoundReport verify_A2_bound(const FrequencyModel& model, double N, int d_max, double C_deno,
                              double C_exp, std::size_t budget) {
  A2BoundReport rep;
  rep.pass = true;
  for (int d = 3; d <= d_max; ++d) {
    const auto scan = min_denominator(model, N, d, d, budget);
    if (scan.min_nonzero <= 0.0) continue;  // nothing nonzero at this degree
    A2BoundReport::Row row;
    row.d = d;
    row.min_divisor = scan.min_nonzero;
    row.ln_floor = std::log(model.nr.gamma) -
                   C_exp * std::pow(static_cast<double>(d), static_cast<double>(model.nr.p)) *
                       std::log(C_deno * d * N);
    row.ln_margin = std::log(scan.min_nonzero) - row.ln_floor;
    row.witness = scan.argmin;
    rep.pass = rep.pass && row.ln_margin >= 0.0;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace nflab
