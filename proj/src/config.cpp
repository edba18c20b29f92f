#include "nflab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nflab/errors.hpp"
#include "nflab/rng.hpp"

namespace nflab {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError("config field '" + where + "' " + what);
}

// Strict block reader: typed getters plus an unknown-key sweep.
class Block {
 public:
  Block(const json& j, std::string prefix) : obj_(j), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) bad(prefix_, "must be an object");
  }

  void get(const char* key, double& v) {
    if (auto* f = find(key)) {
      if (!f->is_number()) bad(path(key), "must be a number");
      v = f->get<double>();
    }
  }
  void get(const char* key, int& v) {
    if (auto* f = find(key)) {
      if (!f->is_number_integer()) bad(path(key), "must be an integer");
      v = f->get<int>();
    }
  }
  void get(const char* key, long long& v) {
    if (auto* f = find(key)) {
      if (!f->is_number_integer()) bad(path(key), "must be an integer");
      v = f->get<long long>();
    }
  }
  void get(const char* key, std::uint64_t& v) {
    if (auto* f = find(key)) {
      if (!f->is_number_unsigned() && !f->is_number_integer())
        bad(path(key), "must be a nonnegative integer");
      const auto raw = f->get<long long>();
      if (f->is_number_integer() && raw < 0) bad(path(key), "must be a nonnegative integer");
      v = f->get<std::uint64_t>();
    }
  }
  void get(const char* key, bool& v) {
    if (auto* f = find(key)) {
      if (!f->is_boolean()) bad(path(key), "must be a boolean");
      v = f->get<bool>();
    }
  }
  void get(const char* key, std::string& v) {
    if (auto* f = find(key)) {
      if (!f->is_string()) bad(path(key), "must be a string");
      v = f->get<std::string>();
    }
  }
  void get(const char* key, std::vector<double>& v) {
    if (auto* f = find(key)) {
      if (!f->is_array()) bad(path(key), "must be an array of numbers");
      v.clear();
      for (const auto& e : *f) {
        if (!e.is_number()) bad(path(key), "must be an array of numbers");
        v.push_back(e.get<double>());
      }
    }
  }
  void get(const char* key, std::vector<std::vector<double>>& v) {
    if (auto* f = find(key)) {
      if (!f->is_array()) bad(path(key), "must be an array of number rows");
      v.clear();
      for (const auto& row : *f) {
        if (!row.is_array()) bad(path(key), "must be an array of number rows");
        std::vector<double> r;
        for (const auto& e : row) {
          if (!e.is_number()) bad(path(key), "must be an array of number rows");
          r.push_back(e.get<double>());
        }
        v.push_back(std::move(r));
      }
    }
  }

  const json* sub(const char* key) { return find(key); }

  // Call after all getters: any key not consumed is a config mistake.
  void finish() {
    for (const auto& [k, v] : obj_.items())
      if (!seen_.count(k)) bad(path(k.c_str()), "is not a recognized field");
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }
  std::string path(const char* key) const {
    return prefix_.empty() ? std::string(key) : prefix_ + "." + key;
  }
  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void read_lattice(const json& j, LatticeBlock& b) {
  Block r(j, "lattice");
  r.get("dim", b.dim);
  r.get("k_max", b.k_max);
  r.get("c", b.c);
  r.finish();
}

void read_weight(const json& j, WeightBlock& b) {
  Block r(j, "weight");
  r.get("family", b.family);
  r.get("theta", b.theta);
  r.get("q", b.q);
  r.get("s", b.s);
  r.get("kappa", b.kappa);
  r.finish();
  if (b.family != "gevrey" && b.family != "logultra")
    bad("weight.family", "must be \"gevrey\" or \"logultra\"");
}

void read_model(const json& j, ModelBlock& b) {
  Block r(j, "model");
  r.get("family", b.family);
  r.get("n", b.n);
  r.get("potential", b.potential);
  r.get("eta", b.eta);
  r.get("mass", b.mass);
  r.get("metric", b.metric);
  r.get("beta", b.beta);
  r.get("C0", b.C0);
  r.get("C1", b.C1);
  r.get("C2", b.C2);
  r.get("delta", b.delta);
  r.get("tau", b.tau);
  r.get("gamma", b.gamma);
  r.get("p", b.p);
  r.finish();
  if (b.family != "convnls" && b.family != "fractional" && b.family != "beam")
    bad("model.family", "must be \"convnls\", \"fractional\" or \"beam\"");
  if (b.potential != "zero" && b.potential != "random")
    bad("model.potential", "must be \"zero\" or \"random\"");
  if (b.p < 0) bad("model.p", "must be >= 0 (0 selects the family default)");
}

void read_normalform(const json& j, NormalformBlock& b) {
  Block r(j, "normalform");
  r.get("N", b.N);
  r.get("d", b.d);
  r.get("K_max", b.K_max);
  r.get("r", b.r);
  r.get("perturb_degree", b.perturb_degree);
  r.get("C_P", b.C_P);
  r.get("override_gate", b.override_gate);
  r.get("remainder_degree_cap", b.remainder_degree_cap);
  r.finish();
}

void read_stability(const json& j, StabilityBlock& b) {
  Block r(j, "stability");
  r.get("eps", b.eps);
  r.get("eps_min", b.eps_min);
  r.get("eps_max", b.eps_max);
  r.get("eps_count", b.eps_count);
  r.get("eps0", b.eps0);
  r.finish();
}

void read_measure(const json& j, MeasureBlock& b) {
  Block r(j, "measure");
  r.get("family", b.family);
  r.get("gamma", b.gamma);
  r.get("N", b.N);
  r.get("d", b.d);
  r.get("samples", b.samples);
  r.get("exponent", b.exponent);
  r.get("M1", b.M1);
  r.get("M2", b.M2);
  r.get("eta", b.eta);
  r.get("zeta1", b.zeta1);
  r.get("zeta2", b.zeta2);
  r.get("big_gamma", b.big_gamma);
  r.get("mass", b.mass);
  r.get("n", b.n);
  r.get("mu1", b.mu1);
  r.get("mu2", b.mu2);
  r.get("conv_gamma", b.conv_gamma);
  r.finish();
  if (b.family != "fractional" && b.family != "beam" && b.family != "convolution")
    bad("measure.family", "must be \"fractional\", \"beam\" or \"convolution\"");
}

void read_simulate(const json& j, SimulateBlock& b) {
  Block r(j, "simulate");
  r.get("K", b.K);
  r.get("dt", b.dt);
  r.get("T_end", b.T_end);
  r.get("eps", b.eps);
  r.get("record_stride", b.record_stride);
  r.get("escape_threshold", b.escape_threshold);
  r.get("split_N", b.split_N);
  r.get("p_coeffs", b.p_coeffs);
  r.finish();
}

void read_verify(const json& j, VerifyBlock& b) {
  Block r(j, "verify");
  r.get("k_max", b.k_max);
  r.get("d_max", b.d_max);
  r.get("a0_samples", b.a0_samples);
  r.get("bracket_trials", b.bracket_trials);
  r.get("hom_trials", b.hom_trials);
  r.finish();
}

json write_lattice(const LatticeBlock& b) {
  return json{{"dim", b.dim}, {"k_max", b.k_max}, {"c", b.c}};
}
json write_weight(const WeightBlock& b) {
  return json{{"family", b.family}, {"theta", b.theta}, {"q", b.q}, {"s", b.s},
              {"kappa", b.kappa}};
}
json write_model(const ModelBlock& b) {
  return json{{"family", b.family}, {"n", b.n},       {"potential", b.potential},
              {"eta", b.eta},       {"mass", b.mass}, {"metric", b.metric},
              {"beta", b.beta},     {"C0", b.C0},     {"C1", b.C1},
              {"C2", b.C2},         {"delta", b.delta}, {"tau", b.tau},
              {"gamma", b.gamma},   {"p", b.p}};
}
json write_normalform(const NormalformBlock& b) {
  return json{{"N", b.N},
              {"d", b.d},
              {"K_max", b.K_max},
              {"r", b.r},
              {"perturb_degree", b.perturb_degree},
              {"C_P", b.C_P},
              {"override_gate", b.override_gate},
              {"remainder_degree_cap", b.remainder_degree_cap}};
}
json write_stability(const StabilityBlock& b) {
  return json{{"eps", b.eps},
              {"eps_min", b.eps_min},
              {"eps_max", b.eps_max},
              {"eps_count", b.eps_count},
              {"eps0", b.eps0}};
}
json write_measure(const MeasureBlock& b) {
  return json{{"family", b.family}, {"gamma", b.gamma},   {"N", b.N},
              {"d", b.d},           {"samples", b.samples}, {"exponent", b.exponent},
              {"M1", b.M1},         {"M2", b.M2},         {"eta", b.eta},
              {"zeta1", b.zeta1},   {"zeta2", b.zeta2},   {"big_gamma", b.big_gamma},
              {"mass", b.mass},     {"n", b.n},           {"mu1", b.mu1},
              {"mu2", b.mu2},       {"conv_gamma", b.conv_gamma}};
}
json write_simulate(const SimulateBlock& b) {
  return json{{"K", b.K},
              {"dt", b.dt},
              {"T_end", b.T_end},
              {"eps", b.eps},
              {"record_stride", b.record_stride},
              {"escape_threshold", b.escape_threshold},
              {"split_N", b.split_N},
              {"p_coeffs", b.p_coeffs}};
}
json write_verify(const VerifyBlock& b) {
  return json{{"k_max", b.k_max},
              {"d_max", b.d_max},
              {"a0_samples", b.a0_samples},
              {"bracket_trials", b.bracket_trials},
              {"hom_trials", b.hom_trials}};
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Block top(j, "");
  if (auto* s = top.sub("lattice")) read_lattice(*s, cfg.lattice);
  if (auto* s = top.sub("weight")) read_weight(*s, cfg.weight);
  if (auto* s = top.sub("model")) read_model(*s, cfg.model);
  if (auto* s = top.sub("normalform")) read_normalform(*s, cfg.normalform);
  if (auto* s = top.sub("stability")) read_stability(*s, cfg.stability);
  if (auto* s = top.sub("measure")) read_measure(*s, cfg.measure);
  if (auto* s = top.sub("simulate")) read_simulate(*s, cfg.simulate);
  if (auto* s = top.sub("verify")) read_verify(*s, cfg.verify);
  top.get("seed", cfg.seed);
  top.get("out", cfg.out);
  top.get("format", cfg.format);
  top.get("jobs", cfg.jobs);
  top.finish();
  if (cfg.format != "csv" && cfg.format != "json")
    bad("format", "must be \"csv\" or \"json\"");
  if (cfg.jobs < 1) bad("jobs", "must be >= 1");
  return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
  json j;
  j["lattice"] = write_lattice(cfg.lattice);
  j["weight"] = write_weight(cfg.weight);
  j["model"] = write_model(cfg.model);
  j["normalform"] = write_normalform(cfg.normalform);
  j["stability"] = write_stability(cfg.stability);
  j["measure"] = write_measure(cfg.measure);
  j["simulate"] = write_simulate(cfg.simulate);
  j["verify"] = write_verify(cfg.verify);
  j["seed"] = cfg.seed;
  j["out"] = cfg.out;
  j["format"] = cfg.format;
  j["jobs"] = cfg.jobs;
  return j.dump(1);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

LatticeGeometry lattice_of(const RunConfig& cfg) {
  const auto& b = cfg.lattice;
  if (b.dim < 1 || b.dim > 3) bad("lattice.dim", "must be 1, 2 or 3");
  if (b.k_max < 1) bad("lattice.k_max", "must be >= 1");
  if (b.c < 1.0) bad("lattice.c", "must be >= 1");
  return LatticeGeometry{b.dim, b.k_max, b.c};
}

WeightSpec weight_of(const RunConfig& cfg) {
  const auto geom = lattice_of(cfg);
  const auto& b = cfg.weight;
  if (b.family == "gevrey") return make_gevrey(b.theta, b.s, geom);
  return make_logultra(b.q, b.s, geom, b.kappa);
}

FrequencyModel model_of(const RunConfig& cfg) {
  const auto geom = lattice_of(cfg);
  const auto& b = cfg.model;
  FrequencyModel model;
  if (b.family == "convnls") {
    std::map<JVec, double> V;
    if (b.potential == "random") V = sample_potential(geom, b.n, derive_seed(cfg.seed, 101));
    model = make_convnls(geom, std::move(V), b.n);
  } else if (b.family == "fractional") {
    model = make_fractional(geom, b.eta, b.mass);
  } else {
    std::array<std::array<double, 3>, 3> g{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    if (!b.metric.empty()) {
      if (static_cast<int>(b.metric.size()) != geom.dim)
        bad("model.metric", "must be a dim x dim matrix");
      for (int a = 0; a < geom.dim; ++a) {
        if (static_cast<int>(b.metric[a].size()) != geom.dim)
          bad("model.metric", "must be a dim x dim matrix");
        for (int c = 0; c < geom.dim; ++c) g[a][c] = b.metric[a][c];
      }
    }
    model = make_beam(geom, g, b.mass);
  }
  if (b.beta != 0.0) model.nr.beta = b.beta;
  if (b.C0 != 0.0) model.nr.C0 = b.C0;
  if (b.delta != 0.0) model.nr.delta = b.delta;
  if (b.C2 != 0.0) model.nr.C2 = b.C2;
  if (b.tau != 0.0) model.nr.tau = b.tau;
  if (b.gamma != 0.0) model.nr.gamma = b.gamma;
  if (b.p != 0) model.nr.p = b.p;
  return model;
}

}  // namespace nflab
