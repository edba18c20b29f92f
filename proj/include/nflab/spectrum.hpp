#pragma once
//
// Frequency families on the mode lattice and their non-resonance diagnostics:
//   ConvNLS     omega_j = |j|^2 + V_j           (V a decaying convolution potential)
//   Fractional  omega_j = (|j|^2 + m)^eta
//   Beam        omega_j = sqrt(g(j,j)^2 + m)    (g a positive definite symmetric form)
//
// Growth (check_A1), cross-block separation (check_A3), and exhaustive
// small-denominator scans over momentum-conserving multi-indices live here.
// Zero divisors are detected structurally (pairing / integer cancellation
// keys), never by floating-point equality.

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nflab/lattice.hpp"

namespace nflab {

struct NonResonanceParams {
  double beta = 2.0;
  double C0 = 2.0;
  double delta = 1.0;
  double C2 = 0.5;
  double tau = 1.0;
  double gamma = 0.5;
  int p = 1;
};

// V keyed by site, missing entries read as 0.  n is the decay exponent of the
// admissible class |V_k| max(|k|,1)^n <= 1/2.
struct ConvNLSKind {
  std::map<JVec, double> V;
  double n = 2.0;
};

struct FractionalKind {
  double eta = 0.75;
  double m = 1.0;
};

// Symmetric form stored dense over the padded 3-vector; unused rows/cols are
// identity so quadratic forms of lower-dimensional sites are unaffected.
struct BeamKind {
  std::array<std::array<double, 3>, 3> g{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  double m = 1.0;
};

struct FrequencyModel {
  std::variant<ConvNLSKind, FractionalKind, BeamKind> kind;
  NonResonanceParams nr;
  LatticeGeometry geom;

  bool is_convnls() const { return std::holds_alternative<ConvNLSKind>(kind); }
  bool is_fractional() const { return std::holds_alternative<FractionalKind>(kind); }
  bool is_beam() const { return std::holds_alternative<BeamKind>(kind); }
  // Integer frequencies (omega_j = |j|^2): enables the exact-rational pipeline.
  bool exact_integer() const {
    auto* c = std::get_if<ConvNLSKind>(&kind);
    return c && c->V.empty();
  }
  std::string family_name() const;
};

FrequencyModel make_convnls(LatticeGeometry geom, std::map<JVec, double> V = {}, double n = 2.0);
FrequencyModel make_fractional(LatticeGeometry geom, double eta, double m);
FrequencyModel make_beam(LatticeGeometry geom, const std::array<std::array<double, 3>, 3>& g,
                         double m);

double omega(const FrequencyModel& model, const JVec& j);
// Valid only when model.exact_integer().
long long omega_int(const FrequencyModel& model, const JVec& j);
// Divisor sum_l sigma_l omega_{j_l}.
double divisor(const FrequencyModel& model, const MultiIndex& m);
long long divisor_int(const FrequencyModel& model, const MultiIndex& m);

// True iff the divisor vanishes identically under the model's structural
// cancellation key (site pairing, +-j orbits for ConvNLS, radius classes for
// Fractional, quadratic-form classes for Beam), or exactly in integer
// arithmetic on the exact path.
bool zero_divisor(const FrequencyModel& model, const MultiIndex& m);

// V_j = uniform[-1/2,1/2] / max(|j|,1)^n on canonical +-j orbits, extended
// evenly (real even potential).
std::map<JVec, double> sample_potential(const LatticeGeometry& geom, double n,
                                        std::uint64_t seed);

struct GrowthReport {
  bool pass = false;
  double worst_low = 0.0;   // min omega_j/|j|^beta observed
  double worst_high = 0.0;  // max
  JVec witness{};
  std::string note;
};
GrowthReport check_A1(const FrequencyModel& model, double j_min, int k_max);

struct SeparationReport {
  bool pass = false;
  double max_admissible_C2 = 0.0;  // min over cross-block pairs of |dω|/(|j1|^δ+|j2|^δ)
  JVec witness_a{}, witness_b{};
  long long pairs_checked = 0;
};
SeparationReport check_A3(const FrequencyModel& model, const BlockPartition& part, int k_max);

struct DivisorScan {
  double min_nonzero = 0.0;  // over structurally nonzero divisors; 0 if none scanned
  MultiIndex argmin;
  std::vector<MultiIndex> zero_witnesses;  // exact zeros that are not site-paired
  long long scanned = 0;
  bool integer_valued = false;  // exact path: min_nonzero is an integer
};
// Enumerates momentum-conserving multisets of degree d_min..d_max with all
// |j_l| <= N (strict < N when strict_radius).  Throws BudgetError when the
// multiset count would exceed the budget.
DivisorScan min_denominator(const FrequencyModel& model, double N, int d_min, int d_max,
                            std::size_t budget = 5'000'000, bool strict_radius = false);

struct A2BoundReport {
  bool pass = false;
  struct Row {
    int d;
    double min_divisor;
    double ln_floor;  // ln gamma - C_exp d^p ln(C_deno d N)
    double ln_margin;
    MultiIndex witness;
  };
  std::vector<Row> rows;
};
// Floor uses the ledger chain gamma/(C_deno d N)^{C_exp d^p}; comparison in
// log space (floors underflow doubles quickly).
A2BoundReport verify_A2_bound(const FrequencyModel& model, double N, int d_max, double C_deno,
                              double C_exp, std::size_t budget = 5'000'000);

}  // namespace nflab
