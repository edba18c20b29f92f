#include "nflab/polyalg.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "nflab/rng.hpp"

namespace nflab {

std::complex<double> evaluate(const Polynomial& P, const WeightedState& u) {
  std::complex<double> acc = 0.0;
  for (const auto& [k, v] : P.terms) {
    std::complex<double> mono = v;
    for (const auto& m : k.entries) mono *= u.at(m);
    acc += mono;
  }
  return acc;
}

WeightedState vector_field(const Polynomial& P, const WeightedState& u) {
  WeightedState X;
  for (const auto& [jkey, pc] : P.terms) {
    std::size_t a = 0;
    while (a < jkey.entries.size()) {
      std::size_t b = a;
      while (b + 1 < jkey.entries.size() && jkey.entries[b + 1] == jkey.entries[a]) ++b;
      const ModeIndex K = jkey.entries[a];
      const double mult = static_cast<double>(b - a + 1);
      // dP/du_K feeds component conj(K) with factor -sigma(conj K) i = +sigma(K) i.
      std::complex<double> mono = pc * mult * std::complex<double>(0.0, K.sigma);
      bool skipped = false;
      for (std::size_t l = 0; l < jkey.entries.size(); ++l) {
        if (!skipped && l == a) {
          skipped = true;
          continue;
        }
        mono *= u.at(jkey.entries[l]);
      }
      if (mono != 0.0) {
        const ModeIndex target = K.conjugate();
        X.amps[target] += mono;
      }
      a = b + 1;
    }
  }
  for (auto it = X.amps.begin(); it != X.amps.end();)
    it = (it->second == 0.0) ? X.amps.erase(it) : std::next(it);
  return X;
}

double max_stored_coeff(const Polynomial& P) {
  double m = 0.0;
  for (const auto& [k, v] : P.terms) m = std::max(m, std::abs(v));
  return m;
}

double coeff_sup_ordered(const Polynomial& P) {
  double m = 0.0;
  for (const auto& [k, v] : P.terms) m = std::max(m, std::abs(v) / k.permutation_count());
  return m;
}

namespace {

// per-degree ordered-coefficient sups
std::map<int, double> slice_sups(const Polynomial& P) {
  std::map<int, double> out;
  for (const auto& [k, v] : P.terms) {
    double& slot = out[k.degree()];
    slot = std::max(slot, std::abs(v) / k.permutation_count());
  }
  return out;
}

double slice_factor(int deg) { return deg <= 2 ? static_cast<double>(deg) : 1.0; }

}  // namespace

double norm_upper_bound(const Polynomial& P, double r) {
  double acc = 0.0;
  for (const auto& [deg, cp] : slice_sups(P))
    acc += slice_factor(deg) * cp * std::pow(r, deg - 2);
  return acc;
}

double norm_mc_estimate(const Polynomial& P, double r, const WeightSpec& w, int samples,
                        std::uint64_t seed) {
  std::set<ModeIndex> support;
  for (const auto& [k, v] : P.terms)
    for (const auto& m : k.entries) {
      support.insert(m);
      support.insert(m.conjugate());
    }
  if (support.empty()) return 0.0;
  std::vector<ModeIndex> modes(support.begin(), support.end());
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const WeightedState u = sample_sphere(w, r, modes, derive_seed(seed, i));
    best = std::max(best, norm_s(vector_field(P, u), w) / r);
  }
  return best;
}

double cutting_bound(const Polynomial& P, double r, double N, const WeightSpec& w) {
  for (const auto& [k, v] : P.terms)
    if (k.high_count(N) < 3)
      throw PropertyError("cutting bound requires every monomial to carry >= 3 modes above N");
  double acc = 0.0;
  for (const auto& [deg, cp] : slice_sups(P))
    acc += cp * std::pow(2.0, deg) * std::pow(r, deg - 2);
  return acc * std::exp(-(w.s - w.s0) * w.value(N));
}

std::string polynomial_to_json(const Polynomial& P, int dim) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [k, v] : P.sorted_terms()) {
    nlohmann::json key = nlohmann::json::array();
    for (const auto& m : k.entries) {
      nlohmann::json jv = nlohmann::json::array();
      for (int c = 0; c < dim; ++c) jv.push_back(m.j[c]);
      key.push_back(nlohmann::json::array({jv, m.sigma}));
    }
    arr.push_back(nlohmann::json::array({key, v.real(), v.imag()}));
  }
  return arr.dump(1);
}

Polynomial polynomial_from_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad polynomial JSON: ") + e.what());
  }
  if (!arr.is_array()) throw ConfigError("polynomial JSON must be an array of terms");
  Polynomial P;
  for (const auto& entry : arr) {
    if (!entry.is_array() || entry.size() != 3)
      throw ConfigError("polynomial term must be [key, re, im]");
    MultiIndex k;
    for (const auto& me : entry[0]) {
      if (!me.is_array() || me.size() != 2)
        throw ConfigError("mode entry must be [[j...], sigma]");
      ModeIndex m;
      const auto& jv = me[0];
      if (!jv.is_array() || jv.empty() || jv.size() > 3)
        throw ConfigError("mode site must have 1..3 components");
      for (std::size_t c = 0; c < jv.size(); ++c) m.j[c] = jv[c].get<int>();
      m.sigma = me[1].get<int>();
      if (m.sigma != 1 && m.sigma != -1) throw ConfigError("sigma must be +1 or -1");
      k.entries.push_back(m);
    }
    k.canonicalize();
    P.add_term(k, std::complex<double>(entry[1].get<double>(), entry[2].get<double>()));
  }
  return P;
}

Polynomial random_real_polynomial(const LatticeGeometry& geom, double radius, int d_min,
                                  int d_max, double coeff_scale, std::uint64_t seed) {
  if (d_min < 1 || d_max < d_min) throw ConfigError("random_real_polynomial: bad degree range");
  const auto modes = modes_within_radius(geom, radius, false);
  std::vector<MultiIndex> keys;
  for (int deg = d_min; deg <= d_max; ++deg)
    enumerate_multisets(modes, deg, [&](const MultiIndex& m) {
      if (m.momentum_zero()) keys.push_back(m);
    });
  std::sort(keys.begin(), keys.end());
  Rng rng(seed);
  Polynomial P;
  for (const auto& k : keys) {
    const MultiIndex kbar = k.conjugate();
    if (kbar < k) continue;  // the conjugate pass fills this slot
    if (k < kbar) {
      const std::complex<double> c(rng.uniform(-coeff_scale, coeff_scale),
                                   rng.uniform(-coeff_scale, coeff_scale));
      P.add_term(k, c);
      P.add_term(kbar, std::conj(c));
    } else {
      P.add_term(k, std::complex<double>(rng.uniform(-coeff_scale, coeff_scale), 0.0));
    }
  }
  return P;
}

}  // namespace nflab
