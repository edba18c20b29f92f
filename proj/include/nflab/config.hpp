#pragma once
//
// One JSON config file drives every CLI command.  Blocks are shared where the
// commands overlap (the same lattice/weight/model triple feeds verify,
// normalform, stability and simulate); command-specific knobs live in their
// own blocks.  Parsing is strict: unknown or mistyped fields raise ConfigError
// naming the offending field, and parse -> serialize -> parse is the identity.

#include <cstdint>
#include <string>
#include <vector>

#include "nflab/spectrum.hpp"
#include "nflab/weights.hpp"

namespace nflab {

struct LatticeBlock {
  int dim = 1;
  int k_max = 8;
  double c = 2.0;
};

struct WeightBlock {
  std::string family = "gevrey";  // gevrey | logultra
  double theta = 0.5;             // gevrey exponent
  double q = 2.0;                 // logultra power
  double s = 10.0;                // working regularity
  double kappa = 0.0;             // logultra shift; 0 -> e^q
};

struct ModelBlock {
  std::string family = "convnls";  // convnls | fractional | beam
  double n = 2.0;                  // convolution potential decay
  std::string potential = "zero";  // convnls: zero | random (seeded)
  double eta = 0.75;               // fractional dispersion exponent
  double mass = 1.0;               // fractional / beam mass
  std::vector<std::vector<double>> metric;  // beam: dim x dim, empty -> identity
  // non-resonance / ledger inputs; 0 keeps the family default
  double beta = 0.0;
  double C0 = 0.0;
  double C1 = 1.0;  // block shell thickness (always explicit)
  double C2 = 0.0;
  double delta = 0.0;
  double tau = 0.0;
  double gamma = 0.0;
  int p = 0;
};

struct NormalformBlock {
  double N = 3.0;       // low/high cutoff
  int d = 5;            // normal-form degree
  double K_max = 4.0;   // perturbation support radius
  double r = 1e-3;      // analysis radius for the bound chain
  int perturb_degree = 3;
  double C_P = 1e-3;    // perturbation coefficient scale
  bool override_gate = false;
  int remainder_degree_cap = 0;  // 0 -> d + 3
};

struct StabilityBlock {
  std::vector<double> eps;  // explicit grid; empty -> log-spaced from the range below
  double eps_min = 1e-8;
  double eps_max = 1e-2;
  int eps_count = 7;
  double eps0 = 0.0;  // admissibility threshold; 0 -> ledger default
};

struct MeasureBlock {
  std::string family = "fractional";  // fractional | beam | convolution
  std::vector<double> gamma{1e-3, 1e-2, 1e-1};
  double N = 4.0;
  int d = 3;
  long long samples = 10000;
  double exponent = -1.0;  // threshold exponent; -1 -> family default
  double M1 = 1.0, M2 = 2.0, eta = 0.75;          // fractional mass window
  double zeta1 = 0.5, zeta2 = 1.0;                // beam scale window
  double big_gamma = 1e-3, mass = 1.0;            // beam separation + mass
  double n = 2.0, mu1 = 1.5, mu2 = 1.5;           // convolution decay / thresholds
  double conv_gamma = 0.5;                        // convolution admissibility scale
};

struct SimulateBlock {
  // Default radius keeps e^{s f(K)} well inside double range so the weighted
  // norm is not roundoff-dominated at the default s.
  int K = 16;
  double dt = 1e-3;
  double T_end = 1.0;
  double eps = 1e-2;      // initial weighted-norm radius
  int record_stride = 100;
  double escape_threshold = 0.0;  // 0 -> no escape watch
  double split_N = 0.0;           // low/high split; 0 -> K/2
  std::vector<double> p_coeffs{1.0};
};

struct VerifyBlock {
  int k_max = 16;        // frequency scan radius for growth/separation checks
  int d_max = 5;         // weight subadditivity degree
  long long a0_samples = 2000;
  int bracket_trials = 20;
  int hom_trials = 10;
};

struct RunConfig {
  LatticeBlock lattice;
  WeightBlock weight;
  ModelBlock model;
  NormalformBlock normalform;
  StabilityBlock stability;
  MeasureBlock measure;
  SimulateBlock simulate;
  VerifyBlock verify;
  std::uint64_t seed = 1;
  std::string out;             // output path; empty -> stdout
  std::string format = "csv";  // csv | json (structured reports are always json)
  int jobs = 1;
};

RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::string& path);

// Materialized module inputs (validated; random potentials are seeded from
// cfg.seed so identical configs produce identical models).
LatticeGeometry lattice_of(const RunConfig& cfg);
WeightSpec weight_of(const RunConfig& cfg);
FrequencyModel model_of(const RunConfig& cfg);

int cli_main(int argc, char** argv);

}  // namespace nflab
