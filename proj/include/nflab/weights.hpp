#pragma once
//
// Ultra-differentiable weight families and the weighted sequence norms.
//
// A weight is an increasing f : [1, inf) -> (0, inf) with a subadditivity
// defect constant C_f < 1:
//     f(x_1 + ... + x_d) <= f(x_max) + C_f * sum_{l != max} f(x_l),  x_l >= c.
// Two families:
//   Gevrey   f(x) = x^theta            (0 < theta < 1, C_f = 2^(theta-1)),
//   LogUltra f(x) = (ln(x + kappa))^q  (q > 1, kappa >= e^q; C_f computed as
//            the sup over a log grid of [f(2x)-f(x)]/f(x), which dominates the
//            general case by concavity of f on [c, inf)).
//
// States live in W_s: ||u||_s = sqrt( sum_J |u_J|^2 e^{2 s f(<j>)} ).
// The base regularity s0 is the smallest value making the lattice sum
//     sum_{|j|_inf <= k_max, sigma} e^{(2 C_f - 2) s0 f(<j>)} < 1/3,
// computed by bisection over the truncated lattice.

#include <complex>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "nflab/lattice.hpp"

namespace nflab {

struct GevreyKind {
  double theta = 0.5;
};

struct LogUltraKind {
  double q = 2.0;
  double kappa = 0.0;  // 0 means "default e^q"
};

struct WeightSpec {
  std::variant<GevreyKind, LogUltraKind> kind;
  double s = 1.0;    // working regularity, must stay > s0
  double s0 = 0.0;   // base regularity from the lattice sum condition
  double Cf = 0.0;   // subadditivity defect
  LatticeGeometry geom;

  bool is_gevrey() const { return std::holds_alternative<GevreyKind>(kind); }

  // f(<x>); throws std::domain_error for x < 1.
  double value(double x) const;
  // f(e^lnx), stable for astronomically large arguments.
  double value_ln(double lnx) const;
  // f evaluated at <j> = max(|j|, c).
  double value_mode(const ModeIndex& m) const { return value(m.angle_bracket(geom.c)); }

  std::string family_name() const { return is_gevrey() ? "gevrey" : "logultra"; }
};

// Factories compute Cf and s0; they validate parameter ranges (ConfigError).
WeightSpec make_gevrey(double theta, double s, const LatticeGeometry& geom);
WeightSpec make_logultra(double q, double s, const LatticeGeometry& geom, double kappa = 0.0);

// The truncated-lattice sum entering the s0 condition.
double s0_lattice_sum(const WeightSpec& w, double s0);
double compute_s0(const WeightSpec& w);

// Defect constant for LogUltra: sup over a log grid of [f(2x)-f(x)]/f(x).
double logultra_defect_constant(double q, double kappa, double c);

struct A0Report {
  bool pass = true;
  long long samples = 0;
  double worst_rel_margin = 1.0;  // min over samples of (RHS-LHS)/RHS
  std::vector<double> worst_x;    // the arguments attaining it
  std::string note;
};

// Samples x_1..x_d >= c across mixed scales and checks the d-variable
// subadditivity inequality with the spec's stored C_f.
A0Report check_A0(const WeightSpec& w, int d_max, long long samples, std::uint64_t seed);

// ── Weighted states ──────────────────────────────────────────────────────────

struct WeightedState {
  std::unordered_map<ModeIndex, std::complex<double>, ModeIndexHash> amps;

  std::complex<double> at(const ModeIndex& m) const {
    auto it = amps.find(m);
    return it == amps.end() ? std::complex<double>(0.0, 0.0) : it->second;
  }
  void set(const ModeIndex& m, std::complex<double> v) { amps[m] = v; }
};

double norm_s(const WeightedState& u, const WeightSpec& w);
double norm_l2(const WeightedState& u);

// Pieces with |J| > N (resp. <= N).
WeightedState project_high(const WeightedState& u, double N);
WeightedState project_low(const WeightedState& u, double N);

// Random state with ||u||_s = r supported on `support`; per-mode complex
// Gaussians damped by e^{-s f(<j>)} then rescaled.  With real_field = true the
// support is closed under conjugation and u_{(j,-)} = conj(u_{(j,+)}).
WeightedState sample_sphere(const WeightSpec& w, double r,
                            const std::vector<ModeIndex>& support, std::uint64_t seed,
                            bool real_field = false);

}  // namespace nflab
