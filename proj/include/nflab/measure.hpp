#pragma once
//
// Parameter-family measure estimation: how often do small denominators dip
// below a Diophantine threshold as the family parameter varies?
//
// Three families:
//   FractionalMass   omega_j = (|j|^2 + m)^eta, m uniform in [M1, M2]
//   BeamMetric       omega_j = sqrt(gbar(j,j)^2 + xi) after the xi = m/zeta^4
//                    substitution; gbar on the unit sphere of the tau* = d(d+1)/2
//                    dimensional symmetric-coefficient space
//   ConvolutionSet   omega_j = |j|^2 + V_j, V drawn from the decaying class
//
// The determinant machinery (derivative Wronskians in the parameter, their
// factored Vandermonde form, and the directional-derivative / sublevel-measure
// lemmas) backs the linear-in-gamma bound that the sampler probes.
//
// Metric membership ("G_Gamma") is tested over *integer* coefficient vectors
// ell with |ell|_1 capped: the literal all-real-ell inequality is
// scale-impossible, and the separation argument only ever uses the integer
// vectors ell_ij built from R_i R_j - S_i S_j.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "nflab/lattice.hpp"

namespace nflab {

struct FractionalMassFamily {
  double M1 = 1.0, M2 = 2.0;
  double eta = 0.75;
};

struct BeamMetricFamily {
  double zeta1 = 0.5, zeta2 = 1.0;
  double Gamma = 1e-3;
  int dim = 1;
  double mass = 1.0;
  // Unit-sphere metric coefficients (a <= b packed order), used by determinant
  // instances; samplers draw their own.  Empty means normalized identity.
  std::vector<double> gbar;
  long long ell_l1_cap = 0;  // 0 -> 2 dim N^2 at use site
};

struct ConvolutionSetFamily {
  double n = 2.0;
  double mu1 = 1.5, mu2 = 1.5;
  double gamma = 0.5;  // default threshold scale; call sites may override
};

struct DiophantineFamilySpec {
  std::variant<FractionalMassFamily, BeamMetricFamily, ConvolutionSetFamily> family;
};

inline int tau_star(int dim) { return dim * (dim + 1) / 2; }

// Validates intervals, Gamma > 0, mu > 1; throws ConfigError.
void validate_family(const DiophantineFamilySpec& fam);

// ── derivative determinants ──────────────────────────────────────────────────
//
// Rows l = 0..k-1 of d^l/d param^l of omega_i = (rho_i + param)^eta.  The beam
// case reduces to eta = 1/2 with rho_i = gbar(j_i,j_i)^2 under xi rows.

// 50-digit Gaussian elimination on the closed-form derivative matrix.
double determinant_direct(const std::vector<double>& rho, double eta, double param);
// omega-product x eta-falling-factorial powers x Vandermonde product.
double determinant_factored(const std::vector<double>& rho, double eta, double param);

// Builds rho from the index set per family, evaluates both paths, insists they
// agree to 1e-9 relative, returns the factored value.
double frequency_determinant(const DiophantineFamilySpec& fam, const std::vector<JVec>& js,
                             double param);

// Positive lower bound for |D| valid for every param in [M1, M2]:
//   prod_i (rho_i + M1)^eta * prod_n |eta-n|^{k-1-n} * prod_{r<s} |rho_r - rho_s|
//   / (rho_max + M2)^{k(k-1)}.
double determinant_lower_bound(const std::vector<double>& rho, double eta, double M1, double M2);

// ── scalar lemmas ────────────────────────────────────────────────────────────

struct DirectionalBound {
  int index = -1;       // argmax_i |u^(i) . w|
  double value = 0.0;   // the attained |u^(i) . w|
  double bound = 0.0;   // ||w||_1 |det U| / k^{3/2}
  bool degenerate = false;  // det exactly zero (dependent rows)
};
// Rows u^(i) must have l1 norm <= 1.  Asserts value >= bound.
DirectionalBound directional_derivative_bound(const std::vector<std::vector<double>>& u,
                                              const std::vector<double>& w);

// |{x : |F(x)| <= h}| <= 2 (2 + 3 + ... + m + 1/d_lower) h^{1/m} for F with
// m-th derivative >= d_lower; the 2+...+m sum is empty at m = 1.
double sublevel_measure_bound(int m_order, double d_lower, double h);

// ── resonant-fraction sampling ───────────────────────────────────────────────

// Default threshold exponent e in gamma/N^e: 4 d^3 (fractional),
// 4 (tau*+1) d^3 (beam), mu1 + mu2 + n (convolution potentials).
double default_threshold_exponent(const DiophantineFamilySpec& fam, int d_max);

struct ResonantFractionResult {
  double fraction = 0.0, ci_low = 0.0, ci_high = 0.0;  // Wilson 95%
  long long violations = 0, samples = 0;
  double threshold = 0.0, exponent = 0.0;
  std::uint64_t seed = 0;
  long long signatures = 0;  // deduplicated divisor families scanned per sample
};

// Samples the family parameter `samples` times (per-sample counter-derived
// seeds; order-independent) and counts how often some momentum-conserving
// multiset of degree <= d_max, all |j_l| < N, has |divisor| below
// gamma/N^exponent.  Signature-level deduplication makes the per-sample scan
// cheap.  Throws BudgetError if the multiset enumeration exceeds `budget`.
ResonantFractionResult resonant_fraction(const DiophantineFamilySpec& fam,
                                         const LatticeGeometry& geom, double gamma, double N,
                                         int d_max, long long samples, std::uint64_t seed,
                                         double exponent_override = -1.0,
                                         std::size_t budget = 5'000'000);

// ── beam metric-space diagnostics ────────────────────────────────────────────

// |sum_{a<=b} gbar_ab ell_ab| >= Gamma/|ell|_1^{tau*} for all nonzero integer
// ell with |ell|_1 <= l1_cap.
bool beam_metric_in_G_Gamma(const std::vector<double>& gbar, int dim, double Gamma,
                            long long l1_cap);

// Fraction of unit-sphere directions failing membership (empirically -> 0 as
// Gamma -> 0).  Non-positive-definite draws are rejected before the test.
double beam_membership_failure_fraction(int dim, double Gamma, long long l1_cap,
                                        long long samples, std::uint64_t seed);

struct SeparationScan {
  bool pass = false;
  double min_margin = 0.0;  // min over pairs of ||R|^2_g - |S|^2_g| - Gamma/(2N)^{2 tau*}
  JVec witness_a{}, witness_b{};
  long long pairs = 0;
};
// For gbar in G_Gamma: scan site pairs R != S with |R|, |S| <= N whose
// quadratic-form integer vectors differ.
SeparationScan beam_separation_scan(const std::vector<double>& gbar, int dim, double Gamma,
                                    double N);

// Gaussian direction on the unit sphere of ||g||_2 (off-diagonals weighted
// twice), redrawn until positive definite.
std::vector<double> sample_unit_metric(int dim, std::uint64_t seed);

// Quadratic form gbar(j,j) from packed a <= b coefficients.
double metric_form(const std::vector<double>& gbar, int dim, const JVec& j);

}  // namespace nflab
