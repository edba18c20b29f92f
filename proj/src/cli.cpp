#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nflab/config.hpp"
#include "nflab/errors.hpp"
#include "nflab/measure.hpp"
#include "nflab/normalform.hpp"
#include "nflab/polyalg.hpp"
#include "nflab/rng.hpp"
#include "nflab/simulator.hpp"
#include "nflab/spectrum.hpp"
#include "nflab/stability.hpp"
#include "nflab/weights.hpp"

namespace nflab {
namespace {

using nlohmann::json;

std::string fmt_g(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// Stability horizons overflow double; print exp(ln_v) as mantissa/exponent
// computed in log10 space.
std::string fmt_exp_ln(double ln_v) {
  if (std::isnan(ln_v)) return "nan";
  const double l10 = ln_v / std::log(10.0);
  double e = std::floor(l10);
  double m = std::pow(10.0, l10 - e);
  if (m >= 9.9999995) {  // rounding rolled the mantissa over
    m /= 10.0;
    e += 1.0;
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6fe%+lld", m, static_cast<long long>(e));
  return buf;
}

void write_output(const RunConfig& cfg, const std::string& payload) {
  if (cfg.out.empty()) {
    std::cout << payload;
    if (payload.empty() || payload.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw ConfigError("cannot open output path: " + cfg.out);
  f << payload;
  if (payload.empty() || payload.back() != '\n') f << '\n';
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  return out.str();
}

json jvec_json(const JVec& j, int dim) {
  json out = json::array();
  for (int a = 0; a < dim; ++a) out.push_back(j[a]);
  return out;
}

LedgerInputs ledger_inputs_of(const RunConfig& cfg, const NonResonanceParams& nr) {
  LedgerInputs li;
  li.C0 = nr.C0;
  li.C1 = cfg.model.C1;
  li.C2 = nr.C2;
  li.beta = nr.beta;
  li.delta = nr.delta;
  li.tau = nr.tau;
  li.gamma = nr.gamma;
  li.p = nr.p;
  li.C_P = cfg.normalform.C_P;
  return li;
}

BlockPartition partition_of(const RunConfig& cfg) {
  BlockPartition part;
  part.thickness = cfg.model.C1;
  return part;
}

// ── verify ───────────────────────────────────────────────────────────────────

int cmd_verify(const RunConfig& cfg) {
  const auto geom = lattice_of(cfg);
  const auto w = weight_of(cfg);
  const auto model = model_of(cfg);
  const auto part = partition_of(cfg);
  json rep;
  bool pass = true;

  const auto a0 = check_A0(w, cfg.verify.d_max, cfg.verify.a0_samples, derive_seed(cfg.seed, 11));
  rep["subadditivity"] = {{"pass", a0.pass},
                          {"samples", a0.samples},
                          {"worst_rel_margin", a0.worst_rel_margin},
                          {"worst_x", a0.worst_x},
                          {"note", a0.note}};
  pass = pass && a0.pass;

  const auto a1 = check_A1(model, geom.c, cfg.verify.k_max);
  rep["growth"] = {{"pass", a1.pass},
                   {"min_ratio", a1.worst_low},
                   {"max_ratio", a1.worst_high},
                   {"bound", cfg.model.C0},
                   {"witness", jvec_json(a1.witness, geom.dim)},
                   {"note", a1.note}};
  pass = pass && a1.pass;

  const auto a3 = check_A3(model, part, cfg.verify.k_max);
  rep["separation"] = {{"pass", a3.pass},
                       {"max_admissible_C2", a3.max_admissible_C2},
                       {"required_C2", cfg.model.C2},
                       {"pairs_checked", a3.pairs_checked},
                       {"witness_a", jvec_json(a3.witness_a, geom.dim)},
                       {"witness_b", jvec_json(a3.witness_b, geom.dim)}};
  pass = pass && a3.pass;

  // Bracket identities on random real momentum-conserving polynomials.
  const double brad = std::min(4.0, static_cast<double>(geom.k_max));
  double worst_anti = 0.0, worst_jacobi = 0.0;
  bool degree_ok = true, momentum_ok = true;
  for (int t = 0; t < cfg.verify.bracket_trials; ++t) {
    const auto P = random_real_polynomial(geom, brad, 2, 4, 1.0, derive_seed(cfg.seed, 1000 + 3 * t));
    const auto Q = random_real_polynomial(geom, brad, 2, 4, 1.0, derive_seed(cfg.seed, 1001 + 3 * t));
    const auto R = random_real_polynomial(geom, brad, 2, 3, 1.0, derive_seed(cfg.seed, 1002 + 3 * t));
    auto PQ = poisson(P, Q);
    const double scale = std::max(max_stored_coeff(PQ), 1e-300);
    auto anti = PQ;
    anti += poisson(Q, P);
    worst_anti = std::max(worst_anti, max_stored_coeff(anti) / scale);
    auto jac = poisson(P, poisson(Q, R));
    jac += poisson(Q, poisson(R, P));
    jac += poisson(R, poisson(P, Q));
    const double jscale = std::max(max_stored_coeff(poisson(P, poisson(Q, R))), 1e-300);
    worst_jacobi = std::max(worst_jacobi, max_stored_coeff(jac) / jscale);
    momentum_ok = momentum_ok && PQ.momentum_conserving();
    for (const auto& [k, v] : PQ.terms)
      degree_ok = degree_ok && k.degree() >= P.min_degree() + Q.min_degree() - 2 &&
                  k.degree() <= P.max_degree() + Q.max_degree() - 2;
  }
  const bool bracket_pass = worst_anti <= 1e-14 && worst_jacobi <= 1e-12 && degree_ok && momentum_ok;
  rep["bracket"] = {{"pass", bracket_pass},
                    {"trials", cfg.verify.bracket_trials},
                    {"antisymmetry_rel", worst_anti},
                    {"jacobi_rel", worst_jacobi},
                    {"degree_law", degree_ok},
                    {"momentum_closure", momentum_ok}};
  pass = pass && bracket_pass;

  // Homological identity {H0,G} + P = Z with Z confined to the resonant classes.
  const auto ledger = build_ledger(w, ledger_inputs_of(cfg, model.nr));
  const double N = cfg.normalform.N;
  const double hrad = std::min(N, static_cast<double>(geom.k_max));
  double worst_resid = 0.0, min_divisor = 0.0;
  bool classes_ok = true, hom_pass = true;
  std::string hom_note;
  for (int t = 0; t < cfg.verify.hom_trials && hom_pass; ++t) {
    const auto P = random_real_polynomial(geom, hrad, 3, 3, 1.0, derive_seed(cfg.seed, 2000 + t));
    try {
      const auto split = solve_homological(P, model, N, ledger, 3, part);
      auto resid = h0_bracket(model, split.G);
      resid += P;
      resid -= split.Z;
      worst_resid =
          std::max(worst_resid, max_stored_coeff(resid) / std::max(max_stored_coeff(P), 1e-300));
      if (t == 0 || (split.min_abs_divisor > 0.0 && split.min_abs_divisor < min_divisor))
        min_divisor = split.min_abs_divisor;
      for (const auto& [k, v] : split.Z.terms) {
        const auto c = classify(k, model, N, part);
        classes_ok = classes_ok && (c == ResonanceClass::R0 || c == ResonanceClass::R2);
      }
    } catch (const PropertyError& e) {
      hom_pass = false;
      hom_note = e.what();
    }
  }
  hom_pass = hom_pass && worst_resid <= 1e-12 && classes_ok;
  rep["homological"] = {{"pass", hom_pass},
                        {"trials", cfg.verify.hom_trials},
                        {"residual_rel", worst_resid},
                        {"min_divisor", min_divisor},
                        {"resonant_classes_only", classes_ok},
                        {"note", hom_note}};
  pass = pass && hom_pass;

  rep["pass"] = pass;
  write_output(cfg, rep.dump(1));
  return pass ? 0 : 1;
}

// ── normalform ───────────────────────────────────────────────────────────────

int cmd_normalform(const RunConfig& cfg) {
  const auto geom = lattice_of(cfg);
  const auto w = weight_of(cfg);
  const auto model = model_of(cfg);
  const auto ledger = build_ledger(w, ledger_inputs_of(cfg, model.nr));
  const double support = std::min(cfg.normalform.K_max, static_cast<double>(geom.k_max));
  const auto P = random_real_polynomial(geom, support, 3, cfg.normalform.perturb_degree,
                                        cfg.normalform.C_P, derive_seed(cfg.seed, 21));
  BirkhoffOptions opt;
  opt.d = cfg.normalform.d;
  opt.N = cfg.normalform.N;
  opt.r = cfg.normalform.r;
  opt.part = partition_of(cfg);
  opt.override_gate = cfg.normalform.override_gate;
  opt.remainder_degree_cap = cfg.normalform.remainder_degree_cap;
  const auto nf = birkhoff_iterate(P, model, w, ledger, opt);
  json j = json::parse(normal_form_to_json(nf, geom.dim));
  j["perturbation"] = json::parse(polynomial_to_json(P, geom.dim));
  j["model"] = model.family_name();
  write_output(cfg, j.dump(1));
  return 0;
}

// ── stability ────────────────────────────────────────────────────────────────

std::vector<double> eps_grid_of(const StabilityBlock& b) {
  if (!b.eps.empty()) return b.eps;
  if (b.eps_count < 1) throw ConfigError("config field 'stability.eps_count' must be >= 1");
  if (!(b.eps_min > 0.0) || !(b.eps_max >= b.eps_min))
    throw ConfigError("config field 'stability.eps_min/eps_max' must satisfy 0 < min <= max");
  std::vector<double> out;
  if (b.eps_count == 1) return {b.eps_min};
  const double l0 = std::log(b.eps_min), l1 = std::log(b.eps_max);
  for (int i = 0; i < b.eps_count; ++i)
    out.push_back(std::exp(l0 + (l1 - l0) * i / (b.eps_count - 1)));
  return out;
}

int cmd_stability(const RunConfig& cfg) {
  const auto w = weight_of(cfg);
  const int p = model_of(cfg).nr.p;
  const auto ledger = build_ledger(w, ledger_inputs_of(cfg, model_of(cfg).nr));
  const double eps0 =
      cfg.stability.eps0 > 0.0 ? cfg.stability.eps0 : default_eps0(w, p, ledger);
  const auto grid = eps_grid_of(cfg.stability);
  std::vector<std::vector<std::string>> rows;
  json jrows = json::array();
  for (const double eps : grid) {
    try {
      const auto pred = predict_time(w, p, eps, ledger, eps0);
      rows.push_back({fmt_g(pred.eps), std::to_string(pred.d), fmt_g(pred.N),
                      fmt_exp_ln(pred.ln_T), pred.regime});
      jrows.push_back({{"eps", pred.eps},
                       {"d", pred.d},
                       {"N", pred.N},
                       {"T", fmt_exp_ln(pred.ln_T)},
                       {"ln_T", pred.ln_T},
                       {"ln_T_scaled", pred.ln_T_s},
                       {"regime", pred.regime},
                       {"admissible_a", pred.a}});
    } catch (const ConfigError&) {
      rows.push_back({fmt_g(eps), "0", "nan", "nan", "inadmissible"});
      jrows.push_back({{"eps", eps}, {"d", 0}, {"regime", "inadmissible"}});
    }
  }
  if (cfg.format == "json") {
    json j{{"eps0", eps0}, {"rows", jrows}};
    write_output(cfg, j.dump(1));
  } else {
    write_output(cfg, csv_table({"eps", "d", "N", "T", "regime"}, rows));
  }
  return 0;
}

// ── measure ──────────────────────────────────────────────────────────────────

DiophantineFamilySpec measure_family_of(const RunConfig& cfg) {
  const auto& b = cfg.measure;
  DiophantineFamilySpec fam;
  if (b.family == "fractional") {
    fam.family = FractionalMassFamily{b.M1, b.M2, b.eta};
  } else if (b.family == "beam") {
    BeamMetricFamily bm;
    bm.zeta1 = b.zeta1;
    bm.zeta2 = b.zeta2;
    bm.Gamma = b.big_gamma;
    bm.dim = cfg.lattice.dim;
    bm.mass = b.mass;
    fam.family = bm;
  } else {
    fam.family = ConvolutionSetFamily{b.n, b.mu1, b.mu2, b.conv_gamma};
  }
  validate_family(fam);
  return fam;
}

int cmd_measure(const RunConfig& cfg) {
  const auto geom = lattice_of(cfg);
  const auto fam = measure_family_of(cfg);
  if (cfg.measure.gamma.empty())
    throw ConfigError("config field 'measure.gamma' must list at least one value");
  std::vector<std::vector<std::string>> rows;
  json jrows = json::array();
  for (std::size_t i = 0; i < cfg.measure.gamma.size(); ++i) {
    const double gamma = cfg.measure.gamma[i];
    const auto res =
        resonant_fraction(fam, geom, gamma, cfg.measure.N, cfg.measure.d, cfg.measure.samples,
                          derive_seed(cfg.seed, 300 + i), cfg.measure.exponent);
    rows.push_back({cfg.measure.family, fmt_g(gamma), fmt_g(cfg.measure.N),
                    std::to_string(cfg.measure.d), fmt_g(res.fraction), fmt_g(res.ci_low),
                    fmt_g(res.ci_high), std::to_string(res.samples), std::to_string(res.seed)});
    jrows.push_back({{"family", cfg.measure.family},
                     {"gamma", gamma},
                     {"N", cfg.measure.N},
                     {"d", cfg.measure.d},
                     {"fraction", res.fraction},
                     {"ci_low", res.ci_low},
                     {"ci_high", res.ci_high},
                     {"samples", res.samples},
                     {"seed", res.seed},
                     {"violations", res.violations},
                     {"threshold", res.threshold},
                     {"exponent", res.exponent},
                     {"signatures", res.signatures}});
  }
  if (cfg.format == "json") {
    write_output(cfg, json{{"rows", jrows}}.dump(1));
  } else {
    write_output(cfg, csv_table({"family", "gamma", "N", "d", "fraction", "ci_low", "ci_high",
                                 "samples", "seed"},
                                rows));
  }
  return 0;
}

// ── simulate ─────────────────────────────────────────────────────────────────

SimConfig sim_config_of(const RunConfig& cfg) {
  RunConfig local = cfg;  // the Galerkin radius may exceed the algebraic lattice cutoff
  local.lattice.k_max = std::max(cfg.lattice.k_max, cfg.simulate.K);
  SimConfig sc;
  sc.model = model_of(local);
  sc.w = weight_of(local);
  sc.p_coeffs = cfg.simulate.p_coeffs;
  sc.K = cfg.simulate.K;
  sc.dt = cfg.simulate.dt;
  sc.T_end = cfg.simulate.T_end;
  sc.split_N = cfg.simulate.split_N;
  sc.escape_threshold = cfg.simulate.escape_threshold;
  sc.record_stride = cfg.simulate.record_stride;
  sc.seed = cfg.seed;
  return sc;
}

int cmd_simulate(const RunConfig& cfg) {
  const auto sc = sim_config_of(cfg);
  const auto u0 = real_sphere_state(sc, cfg.simulate.eps, derive_seed(cfg.seed, 401));
  const auto traj = run(sc, u0);
  if (cfg.format == "json") {
    json j{{"t", traj.times},          {"norm_s", traj.norms_s},
           {"norm_l2", traj.norms_l2}, {"energy", traj.energy},
           {"norm_low", traj.norm_low}, {"norm_high", traj.norm_high},
           {"escape_time", traj.escape_time}};
    write_output(cfg, j.dump(1));
  } else {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < traj.times.size(); ++i)
      rows.push_back({fmt_g(traj.times[i]), fmt_g(traj.norms_s[i]), fmt_g(traj.norms_l2[i]),
                      fmt_g(traj.energy[i]), fmt_g(traj.norm_low[i]), fmt_g(traj.norm_high[i])});
    write_output(cfg,
                 csv_table({"t", "norm_s", "norm_l2", "energy", "norm_low", "norm_high"}, rows));
  }
  return 0;
}

// ── demo ─────────────────────────────────────────────────────────────────────

int cmd_demo(const RunConfig& cfg) {
  json out;

  // Constant ledger at the reference parameter point.
  LedgerInputs li;
  li.C_P = 1.0;
  const auto led = build_ledger(li);
  out["ledger"] = {{"C_exp", led.C_exp}, {"C_fin", led.C_fin},   {"C_deno", led.C_deno},
                   {"C_sep", led.C_sep}, {"C_thre", led.C_thre}, {"C_rema", led.C_rema},
                   {"D_fin", led.D_fin}};

  // Balanced cutoffs for the configured weight.
  const auto w = weight_of(cfg);
  json bal = json::array();
  for (int d : {5, 10, 20}) {
    const auto sol = solve_balance(w, 1, d);
    bal.push_back({{"d", d}, {"N", sol.N}, {"ln_abs_r", sol.ln_abs_r}});
  }
  out["balance"] = bal;

  // A tiny normal form on the exact-integer model.
  LatticeGeometry geom{1, 4, 2.0};
  const auto model = make_convnls(geom);
  const auto wd = make_gevrey(0.5, 10.0, geom);
  LedgerInputs li2;
  li2.C_P = 1e-3;
  const auto led2 = build_ledger(wd, li2);
  const auto P = random_real_polynomial(geom, 3.0, 3, 3, 1e-3, derive_seed(cfg.seed, 51));
  BirkhoffOptions opt;
  opt.d = 4;
  opt.N = 3.0;
  opt.r = 1e-3;
  opt.override_gate = true;
  const auto nf = birkhoff_iterate(P, model, wd, led2, opt);
  out["normalform"] = {{"d", nf.d},
                       {"N", nf.N},
                       {"gate_ok", nf.gate_ok},
                       {"normal_terms", nf.Z0.term_count() + nf.Zgt.term_count()},
                       {"generators", nf.generators.size()},
                       {"ln_degree_remainder", nf.ln_Rd_bound}};

  // Resonant-fraction sample.
  DiophantineFamilySpec fam;
  fam.family = FractionalMassFamily{};
  const auto mr = resonant_fraction(fam, LatticeGeometry{1, 8, 2.0}, 1e-2, 4.0, 2, 2000,
                                    derive_seed(cfg.seed, 61));
  out["measure"] = {{"gamma", 1e-2},
                    {"fraction", mr.fraction},
                    {"ci_high", mr.ci_high},
                    {"samples", mr.samples}};

  // A short conservative integration.
  RunConfig scfg = cfg;
  scfg.lattice = LatticeBlock{1, 16, 2.0};
  scfg.weight = WeightBlock{};
  scfg.model = ModelBlock{};
  scfg.simulate = SimulateBlock{};
  scfg.simulate.K = 16;
  scfg.simulate.dt = 2e-3;
  scfg.simulate.T_end = 0.4;
  scfg.simulate.record_stride = 50;
  const auto sc = sim_config_of(scfg);
  const auto u0 = real_sphere_state(sc, 1e-2, derive_seed(cfg.seed, 71));
  const auto traj = run(sc, u0);
  out["simulate"] = {{"steps", 200},
                     {"norm_s_first", traj.norms_s.front()},
                     {"norm_s_last", traj.norms_s.back()},
                     {"energy_rel_drift",
                      std::abs(traj.energy.back() - traj.energy.front()) /
                          std::max(std::abs(traj.energy.front()), 1e-300)}};

  write_output(cfg, out.dump(1));
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Normal-form stability laboratory for lattice Hamiltonians"};
  app.fallthrough(true);
  std::string config_path, out_path, format;
  std::uint64_t seed = 0;
  int jobs = 0;
  app.add_option("--config", config_path, "JSON config file (defaults apply when omitted)");
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out_path, "output path (stdout when omitted)");
  app.add_option("--format", format, "table format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--jobs", jobs, "worker cap for sweeps")->check(CLI::PositiveNumber);
  auto* verify = app.add_subcommand("verify", "check weight/frequency assumptions and identities");
  auto* normalform = app.add_subcommand("normalform", "run the normal-form iteration");
  auto* stability = app.add_subcommand("stability", "sweep stability-time predictions");
  auto* measure = app.add_subcommand("measure", "estimate resonant parameter fractions");
  auto* simulate = app.add_subcommand("simulate", "integrate and record weighted norms");
  auto* demo = app.add_subcommand("demo", "small end-to-end tour with shipped defaults");
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (!out_path.empty()) cfg.out = out_path;
    if (!format.empty()) cfg.format = format;
    if (jobs > 0) cfg.jobs = jobs;
    if (verify->parsed()) return cmd_verify(cfg);
    if (normalform->parsed()) return cmd_normalform(cfg);
    if (stability->parsed()) return cmd_stability(cfg);
    if (measure->parsed()) return cmd_measure(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (demo->parsed()) return cmd_demo(cfg);
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 3;
  } catch (const PropertyError& e) {
    std::cerr << "property failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace nflab
