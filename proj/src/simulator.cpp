#include "nflab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include <fftw3.h>

#include "nflab/errors.hpp"
#include "nflab/rng.hpp"

namespace nflab {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double p_eval(const std::vector<double>& c, double y) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * y + *it;
  return acc * y;  // p(y) = c0 y + c1 y^2 + ...
}

double primitive_eval(const std::vector<double>& c, double y) {
  double acc = 0.0;
  double yk = y * y;  // y^{k+2}
  for (std::size_t k = 0; k < c.size(); ++k, yk *= y)
    acc += c[k] * yk / static_cast<double>(k + 2);
  return acc;
}

// beam potential density p(psi) = sum c_k psi^{k+2} and its derivative,
// evaluated in complex arithmetic (real fields stay real to roundoff)
std::complex<double> beam_force(const std::vector<double>& c, std::complex<double> z) {
  std::complex<double> acc = 0.0;
  std::complex<double> zk = z;  // z^{k+1}
  for (std::size_t k = 0; k < c.size(); ++k, zk *= z)
    acc += static_cast<double>(k + 2) * c[k] * zk;
  return acc;
}

double beam_potential(const std::vector<double>& c, std::complex<double> z) {
  std::complex<double> acc = 0.0;
  std::complex<double> zk = z * z;
  for (std::size_t k = 0; k < c.size(); ++k, zk *= z) acc += c[k] * zk;
  return acc.real();
}

int next_pow2(int n) {
  int m = 1;
  while (m < n) m *= 2;
  return m;
}

}  // namespace

SplitStepSim::SplitStepSim(SimConfig cfg) : cfg_(std::move(cfg)) {
  dim_ = cfg_.model.geom.dim;
  if (dim_ < 1 || dim_ > 2) throw ConfigError("simulator supports dimensions 1 and 2");
  if (cfg_.K < 1) throw ConfigError("mode cutoff K must be at least 1");
  if (cfg_.model.geom.k_max < cfg_.K)
    throw ConfigError("model lattice cutoff k_max must cover the simulator K");
  if (!(cfg_.dt > 0.0)) throw ConfigError("time step must be positive");
  if (!(cfg_.T_end >= 0.0)) throw ConfigError("horizon must be nonnegative");
  if (cfg_.record_stride < 1) throw ConfigError("record stride must be at least 1");
  for (double c : cfg_.p_coeffs)
    if (!std::isfinite(c)) throw ConfigError("nonlinearity coefficients must be finite");
  beam_ = std::holds_alternative<BeamKind>(cfg_.model.kind);

  LatticeGeometry g = cfg_.model.geom;
  g.k_max = cfg_.K;
  sites_ = enumerate_sites(g);
  const std::size_t n = sites_.size();
  omega_.resize(n);
  wfac_.resize(n);
  radius2_.resize(n);
  std::map<JVec, int> index;
  for (std::size_t i = 0; i < n; ++i) index[sites_[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < n; ++i) {
    const ModeIndex m{sites_[i], +1};
    omega_[i] = omega(cfg_.model, sites_[i]);
    omega_max_ = std::max(omega_max_, std::abs(omega_[i]));
    wfac_[i] = std::exp(2.0 * cfg_.w.s * cfg_.w.value_mode(m));
    radius2_[i] = static_cast<double>(m.radius2());
    if (beam_ && !(omega_[i] > 0.0))
      throw ConfigError("beam frequencies must be positive for the diagonalization");
  }
  neg_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    JVec nj{};
    for (std::size_t a = 0; a < nj.size(); ++a) nj[a] = -sites_[i][a];
    neg_[i] = index.at(nj);
  }
  if (cfg_.dt * omega_max_ >= kPi)
    throw ConfigError("time step too coarse for the linear phases: need dt*max|omega| < pi");

  // nonlinear field degree D needs (D+1)K+1 points per dimension to keep the
  // retained band alias-free
  const int deg = cfg_.p_coeffs.empty()
                      ? 1
                      : (beam_ ? static_cast<int>(cfg_.p_coeffs.size()) + 1
                               : 2 * static_cast<int>(cfg_.p_coeffs.size()) + 1);
  M_ = next_pow2(std::max((deg + 1) * cfg_.K + 2, 2 * cfg_.K + 2));
  Mtot_ = 1;
  for (int a = 0; a < dim_; ++a) Mtot_ *= static_cast<std::size_t>(M_);
  alpha_ = std::pow(2.0 * kPi, -0.5 * dim_);

  bins_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t bin = 0;
    for (int a = 0; a < dim_; ++a)
      bin = bin * static_cast<std::size_t>(M_) +
            static_cast<std::size_t>((sites_[i][a] % M_ + M_) % M_);
    bins_[i] = bin;
  }

  psi_.assign(n, 0.0);
  if (beam_) phi_.assign(n, 0.0);
  buf_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(Mtot_));
  auto* raw = reinterpret_cast<fftw_complex*>(buf_);
  if (dim_ == 1) {
    bwd_ = reinterpret_cast<fftw_plan_s*>(
        fftw_plan_dft_1d(M_, raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE));
    fwd_ = reinterpret_cast<fftw_plan_s*>(
        fftw_plan_dft_1d(M_, raw, raw, FFTW_FORWARD, FFTW_ESTIMATE));
  } else {
    bwd_ = reinterpret_cast<fftw_plan_s*>(
        fftw_plan_dft_2d(M_, M_, raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE));
    fwd_ = reinterpret_cast<fftw_plan_s*>(
        fftw_plan_dft_2d(M_, M_, raw, raw, FFTW_FORWARD, FFTW_ESTIMATE));
  }
}

SplitStepSim::~SplitStepSim() {
  fftw_destroy_plan(reinterpret_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(reinterpret_cast<fftw_plan>(bwd_));
  fftw_free(buf_);
}

void SplitStepSim::load(const WeightedState& u) {
  constexpr std::complex<double> I(0.0, 1.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const auto up = u.at(ModeIndex{sites_[i], +1});
    if (beam_) {
      const auto um = u.at(ModeIndex{sites_[i], -1});
      const double sq = std::sqrt(omega_[i]);
      psi_[i] = (up + um) * inv_sqrt2 / sq;
      phi_[i] = -I * sq * (up - um) * inv_sqrt2;
    } else {
      psi_[i] = up;
    }
  }
  t_ = 0.0;
}

WeightedState SplitStepSim::state() const {
  constexpr std::complex<double> I(0.0, 1.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  WeightedState u;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (beam_) {
      const double sq = std::sqrt(omega_[i]);
      const auto a = sq * psi_[i] * inv_sqrt2;
      const auto b = I * phi_[i] * inv_sqrt2 / sq;
      u.set(ModeIndex{sites_[i], +1}, a + b);
      u.set(ModeIndex{sites_[i], -1}, a - b);
    } else {
      u.set(ModeIndex{sites_[i], +1}, psi_[i]);
      u.set(ModeIndex{sites_[i], -1}, std::conj(psi_[i]));
    }
  }
  return u;
}

void SplitStepSim::rotate_half(double dt) {
  const double h = 0.5 * dt;
  for (std::size_t i = 0; i < psi_.size(); ++i) {
    const double c = std::cos(omega_[i] * h), s = std::sin(omega_[i] * h);
    const auto p0 = psi_[i], q0 = phi_[i];
    psi_[i] = c * p0 + (s / omega_[i]) * q0;
    phi_[i] = -omega_[i] * s * p0 + c * q0;
  }
}

void SplitStepSim::nls_nonlinear(double dt) {
  if (cfg_.p_coeffs.empty()) return;
  std::fill(buf_, buf_ + Mtot_, std::complex<double>(0.0, 0.0));
  for (std::size_t i = 0; i < psi_.size(); ++i) buf_[bins_[i]] = psi_[i];
  fftw_execute(reinterpret_cast<fftw_plan>(bwd_));
  for (std::size_t x = 0; x < Mtot_; ++x) {
    const double y = std::norm(alpha_ * buf_[x]);
    buf_[x] *= std::polar(1.0, -dt * p_eval(cfg_.p_coeffs, y));
  }
  fftw_execute(reinterpret_cast<fftw_plan>(fwd_));
  const double scale = 1.0 / static_cast<double>(Mtot_);
  for (std::size_t i = 0; i < psi_.size(); ++i) psi_[i] = buf_[bins_[i]] * scale;
}

void SplitStepSim::beam_kick(double dt) {
  if (cfg_.p_coeffs.empty()) return;
  std::fill(buf_, buf_ + Mtot_, std::complex<double>(0.0, 0.0));
  for (std::size_t i = 0; i < psi_.size(); ++i) buf_[bins_[i]] = psi_[i];
  fftw_execute(reinterpret_cast<fftw_plan>(bwd_));
  for (std::size_t x = 0; x < Mtot_; ++x)
    buf_[x] = beam_force(cfg_.p_coeffs, alpha_ * buf_[x]);
  fftw_execute(reinterpret_cast<fftw_plan>(fwd_));
  const double scale = 1.0 / (alpha_ * static_cast<double>(Mtot_));
  for (std::size_t i = 0; i < phi_.size(); ++i) phi_[i] -= dt * buf_[bins_[i]] * scale;
}

void SplitStepSim::advance(double dt) {
  if (beam_) {
    rotate_half(dt);
    beam_kick(dt);
    rotate_half(dt);
  } else {
    for (std::size_t i = 0; i < psi_.size(); ++i)
      psi_[i] *= std::polar(1.0, -0.5 * dt * omega_[i]);
    nls_nonlinear(dt);
    for (std::size_t i = 0; i < psi_.size(); ++i)
      psi_[i] *= std::polar(1.0, -0.5 * dt * omega_[i]);
  }
  t_ += dt;
}

double SplitStepSim::mass() const {
  double acc = 0.0;
  for (const auto& z : psi_) acc += std::norm(z);
  return acc;
}

std::array<double, 3> SplitStepSim::momentum() const {
  std::array<double, 3> acc{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < psi_.size(); ++i) {
    const double v =
        beam_ ? std::imag(psi_[i] * std::conj(phi_[i])) : std::norm(psi_[i]);
    for (int a = 0; a < dim_; ++a) acc[a] += sites_[i][a] * v;
  }
  return acc;
}

double SplitStepSim::energy() const {
  double quad = 0.0;
  for (std::size_t i = 0; i < psi_.size(); ++i)
    quad += beam_ ? 0.5 * (std::norm(phi_[i]) + omega_[i] * omega_[i] * std::norm(psi_[i]))
                  : omega_[i] * std::norm(psi_[i]);
  if (cfg_.p_coeffs.empty()) return quad;
  std::fill(buf_, buf_ + Mtot_, std::complex<double>(0.0, 0.0));
  for (std::size_t i = 0; i < psi_.size(); ++i) buf_[bins_[i]] = psi_[i];
  fftw_execute(reinterpret_cast<fftw_plan>(bwd_));
  double pot = 0.0;
  for (std::size_t x = 0; x < Mtot_; ++x) {
    const auto z = alpha_ * buf_[x];
    pot += beam_ ? beam_potential(cfg_.p_coeffs, z)
                 : primitive_eval(cfg_.p_coeffs, std::norm(z));
  }
  return quad + std::pow(2.0 * kPi, dim_) * pot / static_cast<double>(Mtot_);
}

double SplitStepSim::weighted_sum(bool low, double N, bool use_weights) const {
  const double n2 = N * N;
  double acc = 0.0;
  for (std::size_t i = 0; i < psi_.size(); ++i) {
    if (N >= 0.0 && (low ? radius2_[i] > n2 : radius2_[i] <= n2)) continue;
    const double pair = beam_ ? omega_[i] * std::norm(psi_[i]) + std::norm(phi_[i]) / omega_[i]
                              : 2.0 * std::norm(psi_[i]);
    acc += pair * (use_weights ? wfac_[i] : 1.0);
  }
  return std::sqrt(acc);
}

double SplitStepSim::norm_s_now() const { return weighted_sum(true, -1.0, true); }
double SplitStepSim::norm_l2_now() const { return weighted_sum(true, -1.0, false); }
double SplitStepSim::norm_low(double N) const { return weighted_sum(true, N, true); }
double SplitStepSim::norm_high(double N) const { return weighted_sum(false, N, true); }

double SplitStepSim::reality_residual() const {
  if (!beam_) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < psi_.size(); ++i) {
    worst = std::max(worst, std::abs(psi_[i] - std::conj(psi_[neg_[i]])));
    worst = std::max(worst, std::abs(phi_[i] - std::conj(phi_[neg_[i]])));
  }
  return worst;
}

Trajectory run(const SimConfig& cfg, const WeightedState& initial) {
  SplitStepSim sim(cfg);
  sim.load(initial);
  Trajectory tr;
  const double split_N = cfg.split_N > 0.0 ? cfg.split_N : 0.5 * cfg.K;
  const auto record = [&]() {
    tr.times.push_back(sim.time());
    tr.norms_s.push_back(sim.norm_s_now());
    tr.norms_l2.push_back(sim.norm_l2_now());
    tr.energy.push_back(sim.energy());
    tr.norm_low.push_back(sim.norm_low(split_N));
    tr.norm_high.push_back(sim.norm_high(split_N));
  };
  const long long n_steps =
      static_cast<long long>(std::ceil(cfg.T_end / cfg.dt - 1e-12));
  record();
  for (long long k = 1; k <= n_steps; ++k) {
    sim.step();
    if (!std::isfinite(sim.mass()))
      throw PropertyError("state became non-finite at t = " + std::to_string(sim.time()));
    if (cfg.escape_threshold > 0.0 && sim.norm_s_now() > cfg.escape_threshold) {
      tr.escape_time = sim.time();
      record();
      return tr;
    }
    if (k % cfg.record_stride == 0 || k == n_steps) record();
  }
  return tr;
}

WeightedState real_sphere_state(const SimConfig& cfg, double eps, std::uint64_t seed) {
  if (!(eps >= 0.0)) throw ConfigError("sphere radius must be nonnegative");
  if (eps == 0.0) return WeightedState{};
  LatticeGeometry g = cfg.model.geom;
  g.k_max = cfg.K;
  if (!std::holds_alternative<BeamKind>(cfg.model.kind))
    return sample_sphere(cfg.w, eps, enumerate_modes(g), seed, /*real_field=*/true);

  // beam: physically real (psi, phi), i.e. u_(-j,sigma) = conj(u_(j,-sigma))
  Rng rng(seed);
  WeightedState u;
  for (const JVec& j : enumerate_sites(g)) {
    JVec nj{};
    for (std::size_t a = 0; a < nj.size(); ++a) nj[a] = -j[a];
    if (j < nj) continue;  // one draw per {j,-j} orbit
    const double damp = std::exp(-cfg.w.s * cfg.w.value_mode(ModeIndex{j, +1}));
    const std::complex<double> a(rng.gaussian(), rng.gaussian());
    std::complex<double> b(rng.gaussian(), rng.gaussian());
    if (j == nj) b = std::conj(a);
    u.set(ModeIndex{j, +1}, damp * a);
    u.set(ModeIndex{j, -1}, damp * b);
    if (!(j == nj)) {
      u.set(ModeIndex{nj, +1}, damp * std::conj(b));
      u.set(ModeIndex{nj, -1}, damp * std::conj(a));
    }
  }
  const double n = norm_s(u, cfg.w);
  if (!(n > 0.0)) throw PropertyError("degenerate draw on the weighted sphere");
  const double scale = eps / n;
  for (auto& [m, v] : u.amps) v *= scale;
  return u;
}

std::vector<EscapeRow> escape_experiment(const SimConfig& cfg, const ConstantsLedger& led,
                                         const std::vector<double>& eps_grid,
                                         EscapeRule rule) {
  std::vector<EscapeRow> out;
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    EscapeRow row;
    row.eps = eps_grid[i];
    row.horizon = cfg.T_end;
    row.threshold =
        rule == EscapeRule::TwoR ? 2.0 * row.eps : row.eps / led.C_sta;
    SimConfig rc = cfg;
    rc.escape_threshold = row.threshold;
    const auto u0 = real_sphere_state(cfg, row.eps, derive_seed(cfg.seed, i));
    const Trajectory tr = run(rc, u0);
    row.escape_time = tr.escape_time;
    try {
      const double eps0 = default_eps0(cfg.w, cfg.model.nr.p, led);
      const auto pred = predict_time(cfg.w, cfg.model.nr.p, row.eps, led, eps0);
      row.ln_T_pred = pred.ln_T;
      row.regime = pred.regime;
    } catch (const ConfigError&) {
      row.ln_T_pred = std::numeric_limits<double>::quiet_NaN();
      row.regime = "inadmissible (eps >= eps0)";
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace nflab
