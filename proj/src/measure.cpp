#include "nflab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <utility>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "nflab/errors.hpp"
#include "nflab/rng.hpp"
#include "nflab/spectrum.hpp"

namespace nflab {

namespace {

using big_float = boost::multiprecision::cpp_bin_float_50;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_rho(const std::vector<double>& rho, double eta, double param) {
  if (rho.empty()) throw ConfigError("determinant needs at least one frequency");
  if (!(eta > 0.0) || eta >= 1.0)
    throw ConfigError("determinant rows need a fractional exponent in (0,1)");
  for (double r : rho)
    if (!(r + param > 0.0))
      throw ConfigError("determinant base rho + param must stay positive");
}

// Falling products prod_{n<l}(eta-n) appear row by row; pulling them out of
// the matrix leaves a pure Vandermonde in x_i = 1/(rho_i + param).
double vandermonde(const std::vector<double>& x) {
  double out = 1.0;
  for (std::size_t r = 0; r + 1 < x.size(); ++r)
    for (std::size_t s = r + 1; s < x.size(); ++s) out *= x[s] - x[r];
  return out;
}

double row_l1(const std::vector<double>& v) {
  double out = 0.0;
  for (double c : v) out += std::abs(c);
  return out;
}

}  // namespace

void validate_family(const DiophantineFamilySpec& fam) {
  std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, FractionalMassFamily>) {
          if (!(f.M1 > 0.0) || !(f.M2 > f.M1))
            throw ConfigError("fractional mass interval needs 0 < M1 < M2");
          if (!(f.eta > 0.5) || !(f.eta < 1.0))
            throw ConfigError("fractional exponent eta must lie in (1/2,1)");
        } else if constexpr (std::is_same_v<T, BeamMetricFamily>) {
          if (!(f.zeta1 > 0.0) || !(f.zeta2 > f.zeta1))
            throw ConfigError("beam scale interval needs 0 < zeta1 < zeta2");
          if (!(f.Gamma > 0.0) || f.Gamma > 1.0)
            throw ConfigError("beam membership constant Gamma must lie in (0,1]");
          if (f.dim < 1 || f.dim > 3) throw ConfigError("beam dimension must be 1, 2, or 3");
          if (!(f.mass > 0.0)) throw ConfigError("beam mass must be positive");
          if (!f.gbar.empty() &&
              f.gbar.size() != static_cast<std::size_t>(tau_star(f.dim)))
            throw ConfigError("beam metric coefficient count must be dim(dim+1)/2");
          if (f.ell_l1_cap < 0) throw ConfigError("beam ell cap must be nonnegative");
        } else {
          if (!(f.n > 0.0)) throw ConfigError("potential decay n must be positive");
          if (!(f.mu1 > 1.0) || !(f.mu2 > 1.0))
            throw ConfigError("convolution exponents mu1, mu2 must exceed 1");
          if (!(f.gamma > 0.0) || f.gamma > 1.0)
            throw ConfigError("convolution gamma must lie in (0,1]");
        }
      },
      fam.family);
}

double determinant_direct(const std::vector<double>& rho, double eta, double param) {
  check_rho(rho, eta, param);
  const std::size_t k = rho.size();
  const big_float e = eta;
  std::vector<std::vector<big_float>> M(k, std::vector<big_float>(k));
  for (std::size_t l = 0; l < k; ++l) {
    big_float fall = 1;
    for (std::size_t n = 0; n < l; ++n) fall *= e - static_cast<int>(n);
    for (std::size_t i = 0; i < k; ++i)
      M[l][i] = fall * boost::multiprecision::pow(big_float(rho[i]) + big_float(param),
                                                  e - static_cast<int>(l));
  }
  big_float det = 1;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r)
      if (abs(M[r][c]) > abs(M[piv][c])) piv = r;
    if (M[piv][c] == 0) return 0.0;
    if (piv != c) {
      std::swap(M[piv], M[c]);
      det = -det;
    }
    det *= M[c][c];
    for (std::size_t r = c + 1; r < k; ++r) {
      const big_float f = M[r][c] / M[c][c];
      for (std::size_t cc = c; cc < k; ++cc) M[r][cc] -= f * M[c][cc];
    }
  }
  return det.convert_to<double>();
}

double determinant_factored(const std::vector<double>& rho, double eta, double param) {
  check_rho(rho, eta, param);
  const std::size_t k = rho.size();
  double out = 1.0;
  std::vector<double> x(k);
  for (std::size_t i = 0; i < k; ++i) {
    out *= std::pow(rho[i] + param, eta);
    x[i] = 1.0 / (rho[i] + param);
  }
  // prod_{n=0}^{k-2} (eta-n)^{k-1-n}: each falling factor eta-n shows up in
  // every row below its first appearance.
  for (std::size_t n = 0; n + 1 < k; ++n)
    out *= std::pow(eta - static_cast<double>(n), static_cast<double>(k - 1 - n));
  return out * vandermonde(x);
}

double metric_form(const std::vector<double>& gbar, int dim, const JVec& j) {
  if (gbar.size() != static_cast<std::size_t>(tau_star(dim)))
    throw ConfigError("metric coefficient count must be dim(dim+1)/2");
  double q = 0.0;
  std::size_t t = 0;
  for (int a = 0; a < dim; ++a)
    for (int b = a; b < dim; ++b, ++t)
      q += gbar[t] * (a == b ? static_cast<double>(j[a]) * j[a]
                             : 2.0 * static_cast<double>(j[a]) * j[b]);
  return q;
}

namespace {

std::vector<double> identity_metric(int dim) {
  std::vector<double> g(static_cast<std::size_t>(tau_star(dim)), 0.0);
  std::size_t t = 0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int a = 0; a < dim; ++a)
    for (int b = a; b < dim; ++b, ++t)
      if (a == b) g[t] = scale;
  return g;
}

std::vector<double> family_metric(const BeamMetricFamily& f) {
  return f.gbar.empty() ? identity_metric(f.dim) : f.gbar;
}

struct RhoRows {
  std::vector<double> rho;
  double eta = 0.0;
};

RhoRows rho_rows(const DiophantineFamilySpec& fam, const std::vector<JVec>& js) {
  RhoRows out;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, FractionalMassFamily>) {
          out.eta = f.eta;
          for (const JVec& j : js) {
            long long r2 = 0;
            for (int a : j) r2 += static_cast<long long>(a) * a;
            out.rho.push_back(static_cast<double>(r2));
          }
        } else if constexpr (std::is_same_v<T, BeamMetricFamily>) {
          out.eta = 0.5;
          const auto g = family_metric(f);
          for (const JVec& j : js) {
            const double q = metric_form(g, f.dim, j);
            out.rho.push_back(q * q);
          }
        } else {
          throw ConfigError(
              "convolution potentials have no parameter-derivative determinant");
        }
      },
      fam.family);
  return out;
}

}  // namespace

double frequency_determinant(const DiophantineFamilySpec& fam, const std::vector<JVec>& js,
                             double param) {
  validate_family(fam);
  if (js.empty()) throw ConfigError("determinant needs at least one index");
  const RhoRows rows = rho_rows(fam, js);
  std::vector<double> sorted = rows.rho;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
    if (sorted[i] == sorted[i + 1])
      throw ConfigError("coincident frequency bases make the determinant vanish");
  const double direct = determinant_direct(rows.rho, rows.eta, param);
  const double fact = determinant_factored(rows.rho, rows.eta, param);
  const double scale = std::max({std::abs(direct), std::abs(fact), 1e-300});
  if (std::abs(direct - fact) / scale > 1e-9)
    throw PropertyError("determinant paths disagree beyond 1e-9 relative");
  return fact;
}

double determinant_lower_bound(const std::vector<double>& rho, double eta, double M1,
                               double M2) {
  if (!(M1 > 0.0) || !(M2 >= M1)) throw ConfigError("parameter interval needs 0 < M1 <= M2");
  check_rho(rho, eta, M1);
  const std::size_t k = rho.size();
  double out = 1.0;
  double rho_max = 0.0;
  for (double r : rho) {
    out *= std::pow(r + M1, eta);
    rho_max = std::max(rho_max, r);
  }
  for (std::size_t n = 0; n + 1 < k; ++n)
    out *= std::pow(std::abs(eta - static_cast<double>(n)), static_cast<double>(k - 1 - n));
  for (std::size_t r = 0; r + 1 < k; ++r)
    for (std::size_t s = r + 1; s < k; ++s) out *= std::abs(rho[r] - rho[s]);
  // each Vandermonde difference |x_s - x_r| >= |rho_r - rho_s|/(rho_max+M2)^2
  return out * std::pow(rho_max + M2, -static_cast<double>(k) * (k - 1));
}

DirectionalBound directional_derivative_bound(const std::vector<std::vector<double>>& u,
                                              const std::vector<double>& w) {
  const std::size_t k = u.size();
  if (k == 0 || w.size() != k) throw ConfigError("need k rows u^(i) and a k-vector w");
  for (const auto& row : u) {
    if (row.size() != k) throw ConfigError("rows u^(i) must have length k");
    if (row_l1(row) > 1.0 + 1e-12)
      throw ConfigError("rows u^(i) must have l1 norm at most 1");
  }
  std::vector<std::vector<double>> m = u;
  double det = 1.0;
  bool degenerate = false;
  for (std::size_t c = 0; c < k && !degenerate; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (m[piv][c] == 0.0) {
      det = 0.0;
      degenerate = true;
      break;
    }
    if (piv != c) {
      std::swap(m[piv], m[c]);
      det = -det;
    }
    det *= m[c][c];
    for (std::size_t r = c + 1; r < k; ++r) {
      const double f = m[r][c] / m[c][c];
      for (std::size_t cc = c; cc < k; ++cc) m[r][cc] -= f * m[c][cc];
    }
  }
  DirectionalBound out;
  out.degenerate = degenerate;
  for (std::size_t i = 0; i < k; ++i) {
    double dot = 0.0;
    for (std::size_t c = 0; c < k; ++c) dot += u[i][c] * w[c];
    if (std::abs(dot) >= out.value) {
      out.value = std::abs(dot);
      out.index = static_cast<int>(i);
    }
  }
  out.bound = row_l1(w) * std::abs(det) / std::pow(static_cast<double>(k), 1.5);
  if (!degenerate && out.value < out.bound * (1.0 - 1e-9))
    throw PropertyError("directional derivative fell below its determinant bound");
  return out;
}

double sublevel_measure_bound(int m_order, double d_lower, double h) {
  if (m_order < 1) throw ConfigError("derivative order must be at least 1");
  if (!(d_lower > 0.0)) throw ConfigError("derivative floor must be positive");
  if (!(h >= 0.0)) throw ConfigError("sublevel height must be nonnegative");
  double stair = 0.0;  // 2 + 3 + ... + m, empty at m = 1
  for (int i = 2; i <= m_order; ++i) stair += i;
  return 2.0 * (stair + 1.0 / d_lower) * std::pow(h, 1.0 / m_order);
}

double default_threshold_exponent(const DiophantineFamilySpec& fam, int d_max) {
  const double d = d_max;
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, FractionalMassFamily>) {
          return 4.0 * d * d * d;
        } else if constexpr (std::is_same_v<T, BeamMetricFamily>) {
          return 4.0 * (tau_star(f.dim) + 1) * d * d * d;
        } else {
          return f.mu1 + f.mu2 + f.n;
        }
      },
      fam.family);
}

namespace {

// Packed integer monomial vector of the quadratic form: q = sum_t gbar_t V_t.
std::vector<long long> form_monomials(int dim, const JVec& j) {
  std::vector<long long> v(static_cast<std::size_t>(tau_star(dim)), 0);
  std::size_t t = 0;
  for (int a = 0; a < dim; ++a)
    for (int b = a; b < dim; ++b, ++t)
      v[t] = a == b ? static_cast<long long>(j[a]) * j[a]
                    : 2ll * j[a] * j[b];
  return v;
}

bool positive_definite(const std::vector<double>& gbar, int dim) {
  double m[3][3] = {};
  std::size_t t = 0;
  for (int a = 0; a < dim; ++a)
    for (int b = a; b < dim; ++b, ++t) m[a][b] = m[b][a] = gbar[t];
  if (m[0][0] <= 0.0) return false;
  if (dim >= 2 && m[0][0] * m[1][1] - m[0][1] * m[1][0] <= 0.0) return false;
  if (dim >= 3) {
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if (det <= 0.0) return false;
  }
  return true;
}

std::vector<double> sample_unit_metric_rng(int dim, Rng& rng) {
  const int tau = tau_star(dim);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<double> g(static_cast<std::size_t>(tau));
    for (double& c : g) c = rng.gaussian();
    // ||g||_2 over the full symmetric matrix counts off-diagonals twice
    double n2 = 0.0;
    std::size_t t = 0;
    for (int a = 0; a < dim; ++a)
      for (int b = a; b < dim; ++b, ++t) n2 += (a == b ? 1.0 : 2.0) * g[t] * g[t];
    if (n2 <= 0.0) continue;
    const double inv = 1.0 / std::sqrt(n2);
    for (double& c : g) c *= inv;
    if (positive_definite(g, dim)) return g;
  }
  throw ConfigError("metric sampler found no positive definite direction");
}

// Count of integer vectors with |ell|_1 <= cap in Z^tau, as a double.
double ell_count(int tau, long long cap) {
  double total = 0.0;
  for (int i = 0; i <= tau && i <= cap; ++i) {
    double term = std::exp(std::lgamma(tau + 1.0) - std::lgamma(i + 1.0) -
                           std::lgamma(tau - i + 1.0) +
                           (i > 0 ? std::lgamma(cap + 1.0) - std::lgamma(i + 1.0) -
                                        std::lgamma(cap - i + 1.0)
                                  : 0.0));
    total += term * std::pow(2.0, i);
  }
  return total;
}

bool membership_scan(const std::vector<double>& gbar, int tau, double Gamma,
                     std::size_t idx, long long rem, bool none_yet, long long l1, double acc) {
  if (idx == static_cast<std::size_t>(tau)) {
    if (none_yet) return true;  // the zero vector is exempt
    return std::abs(acc) * std::pow(static_cast<double>(l1), static_cast<double>(tau)) >=
           Gamma;
  }
  // sign symmetry: force the first nonzero coefficient positive
  const long long lo = none_yet ? 0 : -rem;
  for (long long v = lo; v <= rem; ++v) {
    if (!membership_scan(gbar, tau, Gamma, idx + 1, rem - std::llabs(v),
                         none_yet && v == 0, l1 + std::llabs(v),
                         acc + gbar[idx] * static_cast<double>(v)))
      return false;
  }
  return true;
}

}  // namespace

bool beam_metric_in_G_Gamma(const std::vector<double>& gbar, int dim, double Gamma,
                            long long l1_cap) {
  if (gbar.size() != static_cast<std::size_t>(tau_star(dim)))
    throw ConfigError("metric coefficient count must be dim(dim+1)/2");
  if (!(Gamma > 0.0)) throw ConfigError("membership constant Gamma must be positive");
  if (l1_cap < 1) throw ConfigError("ell l1 cap must be at least 1");
  const int tau = tau_star(dim);
  if (ell_count(tau, l1_cap) > 2e8)
    throw BudgetError("integer membership scan exceeds the enumeration budget");
  return membership_scan(gbar, tau, Gamma, 0, l1_cap, true, 0, 0.0);
}

double beam_membership_failure_fraction(int dim, double Gamma, long long l1_cap,
                                        long long samples, std::uint64_t seed) {
  if (samples < 1) throw ConfigError("need at least one sample");
  long long fails = 0;
  for (long long i = 0; i < samples; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const auto g = sample_unit_metric_rng(dim, rng);
    if (!beam_metric_in_G_Gamma(g, dim, Gamma, l1_cap)) ++fails;
  }
  return static_cast<double>(fails) / static_cast<double>(samples);
}

std::vector<double> sample_unit_metric(int dim, std::uint64_t seed) {
  if (dim < 1 || dim > 3) throw ConfigError("beam dimension must be 1, 2, or 3");
  Rng rng(seed);
  return sample_unit_metric_rng(dim, rng);
}

SeparationScan beam_separation_scan(const std::vector<double>& gbar, int dim, double Gamma,
                                    double N) {
  if (gbar.size() != static_cast<std::size_t>(tau_star(dim)))
    throw ConfigError("metric coefficient count must be dim(dim+1)/2");
  if (!(N >= 1.0)) throw ConfigError("separation scan needs N >= 1");
  LatticeGeometry geom;
  geom.dim = dim;
  geom.k_max = static_cast<int>(std::floor(N));
  std::vector<JVec> sites;
  for (const JVec& j : enumerate_sites(geom)) {
    long long r2 = 0;
    for (int a : j) r2 += static_cast<long long>(a) * a;
    if (static_cast<double>(r2) <= N * N) sites.push_back(j);
  }
  SeparationScan out;
  out.min_margin = std::numeric_limits<double>::infinity();
  const double floor_sep =
      Gamma / std::pow(2.0 * N, 2.0 * static_cast<double>(tau_star(dim)));
  for (std::size_t a = 0; a + 1 < sites.size(); ++a) {
    const auto va = form_monomials(dim, sites[a]);
    for (std::size_t b = a + 1; b < sites.size(); ++b) {
      const auto vb = form_monomials(dim, sites[b]);
      if (va == vb) continue;  // same quadratic form for every metric
      ++out.pairs;
      const double gap =
          std::abs(metric_form(gbar, dim, sites[a]) - metric_form(gbar, dim, sites[b]));
      const double margin = gap - floor_sep;
      if (margin < out.min_margin) {
        out.min_margin = margin;
        out.witness_a = sites[a];
        out.witness_b = sites[b];
      }
    }
  }
  out.pass = out.pairs == 0 || out.min_margin >= 0.0;
  return out;
}

namespace {

// One compressed divisor family: |c_0 base_0 + c_1 base_1 + ...| where base
// depends on the sampled parameter.  The integer structure is sample-free, so
// deduplication happens once, up to a global sign flip.
template <class Key>
std::set<std::vector<std::pair<Key, int>>> compress_signatures(
    const std::vector<ModeIndex>& modes, int d_max, std::size_t budget,
    const std::function<Key(const ModeIndex&)>& key_of) {
  double work = 0.0;
  for (int deg = 1; deg <= d_max; ++deg) work += multiset_count(modes.size(), deg);
  if (work > static_cast<double>(budget))
    throw BudgetError("multiset enumeration exceeds the budget");
  std::set<std::vector<std::pair<Key, int>>> sigs;
  for (int deg = 1; deg <= d_max; ++deg) {
    enumerate_multisets(modes, deg, [&](const MultiIndex& m) {
      if (!m.momentum_zero()) return;
      std::map<Key, int> acc;
      for (const auto& e : m.entries) acc[key_of(e)] += e.sigma;
      std::vector<std::pair<Key, int>> sig;
      for (auto& [k, c] : acc)
        if (c != 0) sig.emplace_back(k, c);
      if (sig.empty()) return;  // identically zero divisor, structurally excluded
      if (sig.front().second < 0)
        for (auto& [k, c] : sig) c = -c;
      sigs.insert(std::move(sig));
    });
  }
  return sigs;
}

struct WilsonInterval {
  double lo = 0.0, hi = 0.0;
};

WilsonInterval wilson_95(long long hits, long long n) {
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(hits) / nn;
  const double denom = 1.0 + z * z / nn;
  const double center = (ph + z * z / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(ph * (1.0 - ph) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace

ResonantFractionResult resonant_fraction(const DiophantineFamilySpec& fam,
                                         const LatticeGeometry& geom, double gamma, double N,
                                         int d_max, long long samples, std::uint64_t seed,
                                         double exponent_override, std::size_t budget) {
  validate_family(fam);
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
  if (!(N > 1.0)) throw ConfigError("resonant fraction needs N > 1");
  if (d_max < 1) throw ConfigError("degree cap must be at least 1");
  if (samples < 1) throw ConfigError("need at least one sample");
  if (geom.k_max + 1 < static_cast<int>(std::ceil(N)))
    throw ConfigError("lattice cutoff k_max too small to cover |j| < N");

  ResonantFractionResult out;
  out.samples = samples;
  out.seed = seed;
  out.exponent =
      exponent_override >= 0.0 ? exponent_override : default_threshold_exponent(fam, d_max);
  const double ln_threshold =
      gamma > 0.0 ? std::log(gamma) - out.exponent * std::log(N) : kNegInf;
  out.threshold = gamma > 0.0 ? std::exp(ln_threshold) : 0.0;

  const auto modes = modes_within_radius(geom, N, /*strict=*/true);
  if (modes.empty()) throw ConfigError("no lattice sites inside |j| < N");

  const auto violated = [&](double min_abs) {
    return min_abs < out.threshold || (gamma > 0.0 && min_abs == 0.0);
  };

  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, FractionalMassFamily>) {
          const std::function<long long(const ModeIndex&)> key =
              [](const ModeIndex& e) { return e.radius2(); };
          const auto sigs = compress_signatures<long long>(modes, d_max, budget, key);
          out.signatures = static_cast<long long>(sigs.size());
          std::vector<std::vector<std::pair<double, double>>> flat;
          for (const auto& s : sigs) {
            std::vector<std::pair<double, double>> row;
            for (auto& [r2, c] : s)
              row.emplace_back(static_cast<double>(r2), static_cast<double>(c));
            flat.push_back(std::move(row));
          }
          for (long long i = 0; i < samples; ++i) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
            const double m = rng.uniform(f.M1, f.M2);
            double min_abs = std::numeric_limits<double>::infinity();
            for (const auto& row : flat) {
              double g = 0.0;
              for (auto& [r2, c] : row) g += c * std::pow(r2 + m, f.eta);
              min_abs = std::min(min_abs, std::abs(g));
            }
            if (violated(min_abs)) ++out.violations;
          }
        } else if constexpr (std::is_same_v<T, BeamMetricFamily>) {
          if (geom.dim != f.dim)
            throw ConfigError("beam family dimension must match the lattice");
          using MonKey = std::vector<long long>;
          const std::function<MonKey(const ModeIndex&)> key =
              [&](const ModeIndex& e) { return form_monomials(f.dim, e.j); };
          const auto sigs = compress_signatures<MonKey>(modes, d_max, budget, key);
          out.signatures = static_cast<long long>(sigs.size());
          // shared table of distinct monomial vectors, evaluated once per draw
          std::map<MonKey, std::size_t> vec_index;
          std::vector<std::vector<std::pair<std::size_t, double>>> flat;
          for (const auto& s : sigs) {
            std::vector<std::pair<std::size_t, double>> row;
            for (auto& [v, c] : s) {
              auto it = vec_index.find(v);
              if (it == vec_index.end()) it = vec_index.emplace(v, vec_index.size()).first;
              row.emplace_back(it->second, static_cast<double>(c));
            }
            flat.push_back(std::move(row));
          }
          std::vector<MonKey> vecs(vec_index.size());
          for (auto& [v, idx] : vec_index) vecs[idx] = v;
          const long long cap =
              f.ell_l1_cap > 0
                  ? f.ell_l1_cap
                  : static_cast<long long>(2.0 * f.dim * N * N + 0.5);
          const double xi_lo = f.mass / std::pow(f.zeta2, 4.0);
          const double xi_hi = f.mass / std::pow(f.zeta1, 4.0);
          std::vector<double> q(vecs.size());
          for (long long i = 0; i < samples; ++i) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
            std::vector<double> g;
            bool member = false;
            for (int attempt = 0; attempt < 200 && !member; ++attempt) {
              g = sample_unit_metric_rng(f.dim, rng);
              member = beam_metric_in_G_Gamma(g, f.dim, f.Gamma, cap);
            }
            if (!member)
              throw ConfigError("no metric passed membership; Gamma is too large");
            const double xi = rng.uniform(xi_lo, xi_hi);
            for (std::size_t v = 0; v < vecs.size(); ++v) {
              double qq = 0.0;
              for (std::size_t t = 0; t < g.size(); ++t)
                qq += g[t] * static_cast<double>(vecs[v][t]);
              q[v] = qq;
            }
            double min_abs = std::numeric_limits<double>::infinity();
            for (const auto& row : flat) {
              double dv = 0.0;
              for (auto& [idx, c] : row) dv += c * std::sqrt(q[idx] * q[idx] + xi);
              min_abs = std::min(min_abs, std::abs(dv));
            }
            if (violated(min_abs)) ++out.violations;
          }
        } else {
          // integer Laplacian part plus the even potential on +-j orbits
          struct ConvKey {
            long long lap;
            JVec orbit;
            bool operator<(const ConvKey& o) const {
              return lap != o.lap ? lap < o.lap : orbit < o.orbit;
            }
          };
          const std::function<ConvKey(const ModeIndex&)> key = [](const ModeIndex& e) {
            JVec neg{};
            for (std::size_t a = 0; a < neg.size(); ++a) neg[a] = -e.j[a];
            return ConvKey{e.radius2(), std::max(e.j, neg)};
          };
          const auto sigs = compress_signatures<ConvKey>(modes, d_max, budget, key);
          out.signatures = static_cast<long long>(sigs.size());
          struct ConvRow {
            double lap = 0.0;
            std::vector<std::pair<JVec, double>> pot;
          };
          std::vector<ConvRow> flat;
          for (const auto& s : sigs) {
            ConvRow row;
            for (auto& [k, c] : s) {
              row.lap += static_cast<double>(k.lap) * c;
              row.pot.emplace_back(k.orbit, static_cast<double>(c));
            }
            flat.push_back(std::move(row));
          }
          for (long long i = 0; i < samples; ++i) {
            const auto V =
                sample_potential(geom, f.n, derive_seed(seed, static_cast<std::uint64_t>(i)));
            double min_abs = std::numeric_limits<double>::infinity();
            for (const auto& row : flat) {
              double g = row.lap;
              for (auto& [orbit, c] : row.pot) g += c * V.at(orbit);
              min_abs = std::min(min_abs, std::abs(g));
            }
            if (violated(min_abs)) ++out.violations;
          }
        }
      },
      fam.family);

  out.fraction = static_cast<double>(out.violations) / static_cast<double>(samples);
  const auto ci = wilson_95(out.violations, samples);
  out.ci_low = ci.lo;
  out.ci_high = ci.hi;
  return out;
}

}  // namespace nflab
