#include "nflab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nflab/errors.hpp"
#include "nflab/rng.hpp"

namespace nflab {

double WeightSpec::value(double x) const {
  if (x < 1.0) throw std::domain_error("weight argument below 1");
  if (const auto* g = std::get_if<GevreyKind>(&kind)) return std::pow(x, g->theta);
  const auto& l = std::get<LogUltraKind>(kind);
  return std::pow(std::log(x + l.kappa), l.q);
}

double WeightSpec::value_ln(double lnx) const {
  if (const auto* g = std::get_if<GevreyKind>(&kind)) return std::exp(g->theta * lnx);
  const auto& l = std::get<LogUltraKind>(kind);
  // ln(e^L + kappa) = L + log1p(kappa e^{-L}), safe for huge L.
  const double shifted =
      lnx > 40.0 ? lnx + std::log1p(l.kappa * std::exp(-lnx)) : std::log(std::exp(lnx) + l.kappa);
  return std::pow(shifted, l.q);
}

double s0_lattice_sum(const WeightSpec& w, double s0) {
  double sum = 0.0;
  const double rate = (2.0 * w.Cf - 2.0) * s0;  // negative for Cf < 1, s0 > 0
  for (const auto& site : enumerate_sites(w.geom)) {
    const ModeIndex m{site, +1};
    sum += 2.0 * std::exp(rate * w.value_mode(m));  // both sigma tags
  }
  return sum;
}

double compute_s0(const WeightSpec& w) {
  double lo = 0.0, hi = 1.0;
  while (s0_lattice_sum(w, hi) >= 1.0 / 3.0) {
    hi *= 2.0;
    if (hi > 1e8) throw ConfigError("s0 bisection failed to bracket");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (s0_lattice_sum(w, mid) >= 1.0 / 3.0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;  // strictly below 1/3 by construction
}

double logultra_defect_constant(double q, double kappa, double c) {
  // Two-variable reduction: for concave f the worst pair is x1 = x2 = x, so
  // scan g(x) = [f(2x) - f(x)]/f(x) on a log grid; the sup is interior.
  auto f = [&](double x) { return std::pow(std::log(x + kappa), q); };
  double best = 0.0;
  const double lo = std::log(std::max(c, 1.0)), hi = std::log(1e9);
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const double x = std::exp(lo + (hi - lo) * i / n);
    best = std::max(best, (f(2.0 * x) - f(x)) / f(x));
  }
  return best * (1.0 + 1e-9);
}

static void validate_geometry(const LatticeGeometry& geom) {
  if (geom.dim < 1 || geom.dim > 3) throw ConfigError("lattice dim must be 1..3");
  if (geom.k_max < 1) throw ConfigError("k_max must be >= 1");
  if (geom.c < 1.0) throw ConfigError("angle-bracket floor c must be >= 1");
}

WeightSpec make_gevrey(double theta, double s, const LatticeGeometry& geom) {
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("gevrey theta must lie in (0,1)");
  validate_geometry(geom);
  WeightSpec w;
  w.kind = GevreyKind{theta};
  w.geom = geom;
  w.Cf = std::pow(2.0, theta - 1.0);
  w.s0 = compute_s0(w);
  w.s = s;
  if (w.s <= w.s0) throw ConfigError("working regularity s must exceed s0");
  return w;
}

WeightSpec make_logultra(double q, double s, const LatticeGeometry& geom, double kappa) {
  if (!(q > 1.0)) throw ConfigError("logultra q must exceed 1");
  validate_geometry(geom);
  if (kappa == 0.0) kappa = std::exp(q);
  if (kappa < std::exp(q)) throw ConfigError("logultra kappa must be >= e^q");
  WeightSpec w;
  w.kind = LogUltraKind{q, kappa};
  w.geom = geom;
  w.Cf = logultra_defect_constant(q, kappa, geom.c);
  if (w.Cf >= 1.0) throw ConfigError("logultra defect constant not below 1");
  w.s0 = compute_s0(w);
  w.s = s;
  if (w.s <= w.s0) throw ConfigError("working regularity s must exceed s0");
  return w;
}

A0Report check_A0(const WeightSpec& w, int d_max, long long samples, std::uint64_t seed) {
  A0Report rep;
  rep.samples = samples;
  Rng rng(seed);
  const double c = w.geom.c;
  for (long long n = 0; n < samples; ++n) {
    const int d = static_cast<int>(rng.uniform_int(1, d_max));
    const double scale_hi = rng.log_uniform(2.0 * c, 1e6);
    std::vector<double> x(d);
    double total = 0.0, xmax = 0.0;
    for (auto& v : x) {
      v = rng.log_uniform(c, scale_hi);
      total += v;
      xmax = std::max(xmax, v);
    }
    const double lhs = w.value(total);
    double rhs = w.value(xmax);
    bool max_used = false;
    for (double v : x) {
      if (!max_used && v == xmax) {
        max_used = true;
        continue;
      }
      rhs += w.Cf * w.value(v);
    }
    const double rel = (rhs - lhs) / rhs;
    if (rel < rep.worst_rel_margin) {
      rep.worst_rel_margin = rel;
      rep.worst_x = x;
    }
    if (lhs > rhs * (1.0 + 1e-12)) rep.pass = false;
  }
  return rep;
}

double norm_s(const WeightedState& u, const WeightSpec& w) {
  double sum = 0.0;
  for (const auto& [m, a] : u.amps) sum += std::norm(a) * std::exp(2.0 * w.s * w.value_mode(m));
  return std::sqrt(sum);
}

double norm_l2(const WeightedState& u) {
  double sum = 0.0;
  for (const auto& [m, a] : u.amps) sum += std::norm(a);
  return std::sqrt(sum);
}

WeightedState project_high(const WeightedState& u, double N) {
  WeightedState out;
  const double n2 = N * N;
  for (const auto& [m, a] : u.amps)
    if (static_cast<double>(m.radius2()) > n2) out.amps.emplace(m, a);
  return out;
}

WeightedState project_low(const WeightedState& u, double N) {
  WeightedState out;
  const double n2 = N * N;
  for (const auto& [m, a] : u.amps)
    if (static_cast<double>(m.radius2()) <= n2) out.amps.emplace(m, a);
  return out;
}

WeightedState sample_sphere(const WeightSpec& w, double r,
                            const std::vector<ModeIndex>& support, std::uint64_t seed,
                            bool real_field) {
  WeightedState u;
  Rng rng(seed);
  std::vector<ModeIndex> modes = support;
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
  if (real_field) {
    for (const auto& m : modes) {
      if (m.sigma != +1) continue;
      const double damp = std::exp(-w.s * w.value_mode(m));
      const std::complex<double> a(rng.gaussian() * damp, rng.gaussian() * damp);
      u.amps[m] = a;
      u.amps[m.conjugate()] = std::conj(a);
    }
  } else {
    for (const auto& m : modes) {
      const double damp = std::exp(-w.s * w.value_mode(m));
      u.amps[m] = std::complex<double>(rng.gaussian() * damp, rng.gaussian() * damp);
    }
  }
  const double n = norm_s(u, w);
  if (n == 0.0) throw PropertyError("sample_sphere drew the zero state");
  const double scale = r / n;
  for (auto& [m, a] : u.amps) a *= scale;
  return u;
}

}  // namespace nflab
