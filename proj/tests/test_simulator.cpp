#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nflab/errors.hpp>
#include <nflab/normalform.hpp>
#include <nflab/simulator.hpp>

#include <cmath>
#include <complex>

using namespace nflab;
using C = std::complex<double>;

namespace {

SimConfig nls_config(int K, double dt, double T_end, double s = 6.0) {
  const LatticeGeometry geom{1, K, 2.0};
  SimConfig cfg;
  cfg.model = make_convnls(geom);
  cfg.w = make_gevrey(0.5, s, geom);
  cfg.K = K;
  cfg.dt = dt;
  cfg.T_end = T_end;
  cfg.record_stride = 50;
  return cfg;
}

// O(0.3) low-mode data: large enough that nonlinear effects clear roundoff.
WeightedState bump_state() {
  WeightedState u;
  for (int j = -2; j <= 2; ++j) {
    const C v(0.3 / (1.0 + double(j) * j), 0.05 * j);
    u.set(mode(j, +1), v);
    u.set(mode(j, -1), std::conj(v));
  }
  return u;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("nls run conserves mass, momentum, energy to splitting accuracy") {
  SimConfig cfg = nls_config(16, 1e-3, 1.0);
  SplitStepSim sim(cfg);
  sim.load(bump_state());
  const double m0 = sim.mass();
  const double e0 = sim.energy();
  const auto p0 = sim.momentum();
  for (int i = 0; i < 1000; ++i) sim.step();
  CHECK(rel(sim.mass(), m0) < 1e-10);       // exact invariant of both substeps
  CHECK(rel(sim.energy(), e0) < 1e-6);      // conserved to O(dt^2)
  const auto p1 = sim.momentum();
  CHECK(std::abs(p1[0] - p0[0]) < 1e-12);   // both substeps commute with translations
  CHECK(sim.reality_residual() == 0.0);     // NLS path reports no defect
  CHECK(sim.time() == doctest::Approx(1.0));
}

TEST_CASE("time reversal returns to the initial state") {
  SimConfig cfg = nls_config(16, 1e-3, 1.0);
  SplitStepSim sim(cfg);
  const WeightedState u0 = bump_state();
  sim.load(u0);
  for (int i = 0; i < 400; ++i) sim.step();
  for (int i = 0; i < 400; ++i) sim.step_back();
  const WeightedState u1 = sim.state();
  double worst = 0.0;
  for (const auto& [m, v] : u0.amps) worst = std::max(worst, std::abs(u1.at(m) - v));
  CHECK(worst < 1e-12);
  CHECK(sim.time() == doctest::Approx(0.0));
}

TEST_CASE("strang splitting converges at second order") {
  // error(dt) ~ C dt^2: halving dt must cut the defect by ~4
  auto terminal_state = [&](double dt, int steps) {
    SimConfig cfg = nls_config(8, dt, dt * steps);
    SplitStepSim sim(cfg);
    sim.load(bump_state());
    for (int i = 0; i < steps; ++i) sim.step();
    return sim.state();
  };
  const WeightedState ref = terminal_state(2.5e-5, 4000);  // T = 0.1
  auto err = [&](double dt, int steps) {
    const WeightedState s = terminal_state(dt, steps);
    double worst = 0.0;
    for (const auto& [m, v] : ref.amps) worst = std::max(worst, std::abs(s.at(m) - v));
    return worst;
  };
  const double e1 = err(1e-3, 100);
  const double e2 = err(5e-4, 200);
  const double order = std::log2(e1 / e2);
  CHECK(order > 1.8);
  CHECK(order < 2.2);
}

TEST_CASE("linear flow preserves every weighted norm exactly") {
  SimConfig cfg = nls_config(16, 1e-3, 1.0);
  cfg.p_coeffs = {};  // free flow
  SplitStepSim sim(cfg);
  sim.load(bump_state());
  const double n0 = sim.norm_s_now();
  const double l0 = sim.norm_l2_now();
  for (int i = 0; i < 500; ++i) sim.step();
  CHECK(rel(sim.norm_s_now(), n0) < 1e-13);
  CHECK(rel(sim.norm_l2_now(), l0) < 1e-13);
}

TEST_CASE("load/state round trip and norm split instrumentation") {
  SimConfig cfg = nls_config(16, 1e-3, 1.0);
  SplitStepSim sim(cfg);
  const WeightedState u0 = bump_state();
  sim.load(u0);
  const WeightedState back = sim.state();
  for (const auto& [m, v] : u0.amps) CHECK(std::abs(back.at(m) - v) < 1e-14);

  const double lo = sim.norm_low(4.0);
  const double hi = sim.norm_high(4.0);
  const double ns = sim.norm_s_now();
  CHECK(lo * lo + hi * hi == doctest::Approx(ns * ns));
  // bump data is supported on |j| <= 2
  CHECK(hi == doctest::Approx(0.0));
}

TEST_CASE("trajectory recording and escape watch") {
  SimConfig cfg = nls_config(16, 1e-3, 0.2);
  cfg.record_stride = 40;
  const Trajectory traj = run(cfg, bump_state());
  REQUIRE(traj.times.size() >= 3);
  CHECK(traj.times.front() == doctest::Approx(0.0));
  CHECK(traj.times.back() == doctest::Approx(0.2));
  CHECK(traj.norms_s.size() == traj.times.size());
  CHECK(traj.energy.size() == traj.times.size());
  CHECK_FALSE(traj.escaped());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double lo = traj.norm_low[i], hi = traj.norm_high[i], ns = traj.norms_s[i];
    CHECK(lo * lo + hi * hi == doctest::Approx(ns * ns));
  }

  // a threshold below the initial norm trips immediately
  SimConfig esc = cfg;
  esc.escape_threshold = 1e-6;
  const Trajectory tesc = run(esc, bump_state());
  CHECK(tesc.escaped());
  CHECK(tesc.escape_time <= 2.0 * esc.dt);  // trips on the first watched step
  CHECK(tesc.times.back() == doctest::Approx(tesc.escape_time));
}

TEST_CASE("random real data: sphere radius and conjugate symmetry") {
  SimConfig cfg = nls_config(16, 1e-3, 1.0);
  const WeightedState u = real_sphere_state(cfg, 1e-2, 5);
  CHECK(norm_s(u, cfg.w) == doctest::Approx(1e-2));
  for (const auto& [m, v] : u.amps) {
    const C partner = u.at(m.conjugate());
    CHECK(partner.real() == doctest::Approx(v.real()));
    CHECK(partner.imag() == doctest::Approx(-v.imag()));
  }
  CHECK(real_sphere_state(cfg, 0.0, 5).amps.empty());

  // loading such data keeps the grid field complex-conjugate consistent:
  // the simulator evolves psi from the sigma = +1 half alone
  SplitStepSim sim(cfg);
  sim.load(u);
  CHECK(sim.norm_s_now() == doctest::Approx(1e-2));
}

TEST_CASE("config validation: resolution and cutoff guards") {
  CHECK_THROWS_AS((void)SplitStepSim(nls_config(16, 0.5, 1.0)), ConfigError);  // dt omega_max >= pi
  SimConfig cfg = nls_config(16, 1e-3, 1.0);
  cfg.K = 32;  // lattice cutoff (16) cannot cover the simulator grid
  CHECK_THROWS_AS((void)SplitStepSim(cfg), ConfigError);
}

TEST_CASE("beam free flow conserves the diagonalized pair norms") {
  const LatticeGeometry geom{1, 8, 2.0};
  SimConfig cfg;
  cfg.model = make_beam(geom, {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}, 1.0);
  cfg.w = make_gevrey(0.5, 6.0, geom);
  cfg.K = 8;
  cfg.dt = 2e-3;
  cfg.T_end = 1.0;
  cfg.p_coeffs = {};  // linear beam
  SplitStepSim sim(cfg);

  const WeightedState u0 = real_sphere_state(cfg, 1e-2, 3);
  sim.load(u0);
  const double n0 = sim.norm_s_now();
  const double m0 = sim.mass();
  for (int i = 0; i < 500; ++i) sim.step();
  CHECK(rel(sim.norm_s_now(), n0) < 1e-12);  // u rotates, |u| is invariant
  CHECK(sim.reality_residual() < 1e-13);
  CHECK(rel(sim.mass(), m0) > 1e-8);  // psi_hat itself is not invariant: the
                                      // conservation lives in the u variables
}

TEST_CASE("beam nonlinear run: bounded norms, conserved energy, reversibility") {
  const LatticeGeometry geom{1, 8, 2.0};
  SimConfig cfg;
  cfg.model = make_beam(geom, {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}, 1.0);
  cfg.w = make_gevrey(0.5, 6.0, geom);
  cfg.K = 8;
  cfg.dt = 2e-3;
  cfg.T_end = 1.0;
  cfg.p_coeffs = {1.0};
  SplitStepSim sim(cfg);

  const WeightedState u0 = real_sphere_state(cfg, 1e-2, 4);
  sim.load(u0);
  const double n0 = sim.norm_s_now();
  const double e0 = sim.energy();
  for (int i = 0; i < 200; ++i) sim.step();
  CHECK(rel(sim.energy(), e0) < 1e-6);
  CHECK(sim.norm_s_now() < 1.1 * n0);
  CHECK(sim.norm_s_now() > 0.9 * n0);
  CHECK(sim.reality_residual() < 1e-13);

  for (int i = 0; i < 200; ++i) sim.step_back();
  const WeightedState u1 = sim.state();
  double worst = 0.0;
  for (const auto& [m, v] : u0.amps) worst = std::max(worst, std::abs(u1.at(m) - v));
  CHECK(worst < 1e-12);
}

TEST_CASE("beam transform identities against the spectrum module") {
  // u_(j,sigma) = (Omega^{1/2} psi_hat + sigma i Omega^{-1/2} phi_hat)/sqrt(2):
  // loading pure u_(j,+) must place psi_hat = u / (sqrt(2) Omega^{1/2}) ... the
  // round trip and the free-flow phase exp(-i Omega t) pin both conventions.
  const LatticeGeometry geom{1, 8, 2.0};
  SimConfig cfg;
  cfg.model = make_beam(geom, {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}, 1.0);
  cfg.w = make_gevrey(0.5, 6.0, geom);
  cfg.K = 8;
  cfg.dt = 1e-3;
  cfg.T_end = 1.0;
  cfg.p_coeffs = {};
  SplitStepSim sim(cfg);

  WeightedState u0;  // physical pair: u_- = conj(u_+) at the same site
  const C a(3e-3, 1e-3);
  u0.set(mode(2, +1), a);
  u0.set(mode(2, -1), std::conj(a));
  sim.load(u0);
  // state() reports every grid mode; everything off-support must be ~0
  for (const auto& [m, v] : sim.state().amps)
    if (m.j != JVec{2, 0, 0}) CHECK(std::abs(v) < 1e-15);

  const double Om = omega(cfg.model, JVec{2, 0, 0});  // sqrt(16 + 1)
  CHECK(Om == doctest::Approx(std::sqrt(17.0)));
  const int steps = 250;
  for (int i = 0; i < steps; ++i) sim.step();
  const C expect = a * std::exp(C(0.0, -Om * cfg.dt * steps));
  CHECK(std::abs(sim.state().at(mode(2, +1)) - expect) < 1e-10);
}

TEST_CASE("escape experiment reports honest inadmissibility at desk eps") {
  SimConfig cfg = nls_config(8, 1e-3, 0.05);
  const ConstantsLedger led = build_ledger(cfg.w, LedgerInputs{.C_P = 1e-3});
  const auto rows = escape_experiment(cfg, led, {1e-3, 1e-2});
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.threshold == doctest::Approx(2.0 * row.eps));
    CHECK(row.horizon > 0.0);
    CHECK(row.escape_time < 0.0);  // none of these blow past 2 eps in 0.05 time units
    CHECK(row.regime.find("inadmissible") == 0);
    CHECK(std::isnan(row.ln_T_pred));
  }
}
