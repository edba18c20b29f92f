#pragma once
//
// Split-step spectral integration of the model equations in Fourier variables,
// with weighted-norm instrumentation.
//
//   ConvNLS / Fractional   i psi_t = L psi + p(|psi|^2) psi, L = diag(omega_j)
//   Beam                   psi_tt + (Delta_g^2 + m) psi = -p'(psi), phi = psi_t
//
// Strang splitting with exact linear phases: the linear flow is diagonal in
// these variables, so the only discretization error is the splitting itself.
// The nonlinear substep acts pointwise on a zero-padded grid: the NLS flow
// rotates each value by exp(-i dt p(|psi|^2)) (the modulus is a pointwise
// invariant, so the substep is exact), the beam flow kicks phi by -dt p'(psi).
// Padding covers the leading nonlinear degree alias-free.
//
// Beam states evolve as spectral (psi_hat, phi_hat) pairs; instrumentation
// reports them through the diagonalizing change of variables
//   u_(j,sigma) = (Omega_j^{1/2} psi_hat_j + sigma i Omega_j^{-1/2} phi_hat_j) / sqrt(2),
// so that du/dt = -sigma i Omega u under the free flow and
// |u_+|^2 + |u_-|^2 = Omega |psi_hat|^2 + |phi_hat|^2 / Omega is conserved by it.
// Placing the quarter-powers the other way round fails both properties.

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "nflab/spectrum.hpp"
#include "nflab/stability.hpp"
#include "nflab/weights.hpp"

// FFTW types kept out of this header; the implementation owns the plans.
struct fftw_plan_s;

namespace nflab {

struct SimConfig {
  FrequencyModel model;
  WeightSpec w;
  // p(y) = sum_k p_coeffs[k] y^{k+1} for the NLS families (acting as
  // p(|psi|^2) psi, so the field degree is 2*size+1); for the beam the same
  // vector encodes the potential density p(psi) = sum_k p_coeffs[k] psi^{k+2}.
  std::vector<double> p_coeffs = {1.0};
  int K = 32;                     // mode cutoff per dimension, |j|_inf <= K
  double dt = 1e-3;
  double T_end = 1.0;
  double split_N = 0.0;           // low/high norm split radius; 0 -> K/2
  double escape_threshold = 0.0;  // 0 -> no escape watch
  int record_stride = 100;
  std::uint64_t seed = 1;
};

struct Trajectory {
  std::vector<double> times, norms_s, norms_l2, energy, norm_low, norm_high;
  double escape_time = -1.0;  // negative: no escape before T_end
  bool escaped() const { return escape_time >= 0.0; }
};

class SplitStepSim {
 public:
  explicit SplitStepSim(SimConfig cfg);
  ~SplitStepSim();
  SplitStepSim(const SplitStepSim&) = delete;
  SplitStepSim& operator=(const SplitStepSim&) = delete;

  const SimConfig& config() const { return cfg_; }
  int dim() const { return dim_; }
  int grid_points() const { return M_; }
  double time() const { return t_; }
  double omega_max() const { return omega_max_; }

  void load(const WeightedState& u);
  WeightedState state() const;

  void step() { advance(cfg_.dt); }
  void step_back() { advance(-cfg_.dt); }

  // instrumentation (beam values reported in the u variables)
  double mass() const;                     // sum |psi_hat|^2
  std::array<double, 3> momentum() const;  // sum j |psi_hat|^2 (beam: Im psi conj phi)
  double energy() const;                   // quadratic part + grid quadrature of the primitive
  double norm_s_now() const;
  double norm_l2_now() const;
  double norm_low(double N) const;   // modes |j| <= N
  double norm_high(double N) const;  // modes |j| > N
  double reality_residual() const;   // beam Hermitian-symmetry defect; 0 for NLS

 private:
  void advance(double dt);
  void nls_nonlinear(double dt);
  void beam_kick(double dt);
  void rotate_half(double dt);
  double weighted_sum(bool low, double N, bool use_weights) const;

  SimConfig cfg_;
  int dim_ = 1, M_ = 0;
  std::size_t Mtot_ = 0;
  double t_ = 0.0, omega_max_ = 0.0, alpha_ = 1.0;
  bool beam_ = false;
  std::vector<JVec> sites_;
  std::vector<std::size_t> bins_;
  std::vector<int> neg_;  // index of -j
  std::vector<double> omega_, wfac_, radius2_;
  std::vector<std::complex<double>> psi_, phi_;
  std::complex<double>* buf_ = nullptr;
  fftw_plan_s* fwd_ = nullptr;
  fftw_plan_s* bwd_ = nullptr;
};

// Integrates to T_end, or to the first recorded escape when
// cfg.escape_threshold > 0; records every record_stride steps plus the first
// and last states.  Aborts with PropertyError on non-finite state.
Trajectory run(const SimConfig& cfg, const WeightedState& initial);

// Random data on the sphere ||u||_s = eps, real in the sense the equations
// need: conjugate-paired sigma entries for NLS, Hermitian (psi, phi) physical
// fields for the beam.  eps = 0 gives the zero state.
WeightedState real_sphere_state(const SimConfig& cfg, double eps, std::uint64_t seed);

enum class EscapeRule {
  TwoR,          // threshold 2 eps, the T_r convention
  TheoremScale,  // threshold eps / C_sta
};

struct EscapeRow {
  double eps = 0.0;
  double threshold = 0.0;
  double escape_time = -1.0;  // negative: no escape by horizon
  double horizon = 0.0;
  double ln_T_pred = 0.0;  // NaN when the prediction does not apply
  std::string regime;      // balance regime, or why the prediction is inadmissible
};

// One row per eps: integrate random real data until escape or horizon and
// join the stability module's predicted time (usually "inadmissible" at desk
// amplitudes, which the table records honestly).
std::vector<EscapeRow> escape_experiment(const SimConfig& cfg, const ConstantsLedger& led,
                                         const std::vector<double>& eps_grid,
                                         EscapeRule rule = EscapeRule::TwoR);

}  // namespace nflab
