#include "corrlab_cli/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <set>

#include "corrlab/errors.hpp"
#include "corrlab/scaling_field.hpp"

namespace corrlab::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

ScanGrid parse_grid(const json& j, ScanGrid grid, const std::string& where) {
  reject_unknown(j, {"eps", "scaled_norms", "directions", "p_list", "radius_factor"}, where);
  read(j, "eps", grid.eps, where);
  read(j, "scaled_norms", grid.scaled_norms, where);
  read(j, "directions", grid.directions, where);
  read(j, "p_list", grid.p_list, where);
  read(j, "radius_factor", grid.radius_factor, where);
  return grid;
}

std::vector<std::vector<int>> default_directions(int d) {
  std::vector<std::vector<int>> dirs;
  std::vector<int> v(static_cast<std::size_t>(d), 0);
  v[0] = 1;
  dirs.push_back(v);
  if (d >= 2) {
    v[1] = 1;
    dirs.push_back(v);
  }
  dirs.push_back(std::vector<int>(static_cast<std::size_t>(d), 1));
  return dirs;
}

std::string grid_name(Lemma l) { return std::string("lemma.") + std::string(to_string(l)); }

json grid_json(const ScanGrid& g, bool with_p) {
  json j = {{"eps", g.eps}, {"scaled_norms", g.scaled_norms}, {"directions", g.directions}};
  if (with_p) {
    j["p_list"] = g.p_list;
    j["radius_factor"] = g.radius_factor;
  }
  return j;
}

}  // namespace

std::vector<Probe> ExperimentConfig::probes() const {
  std::vector<Probe> out;
  for (double e : eps_list) {
    for (double l : lambda_list) out.push_back({e, l});
  }
  return out;
}

std::vector<Probe> ExperimentConfig::probes_at_lambda(double lambda) const {
  std::vector<Probe> out;
  for (double e : eps_list) out.push_back({e, lambda});
  return out;
}

BootstrapOptions ExperimentConfig::bootstrap(std::uint32_t stream) const {
  return {bootstrap_resamples, bootstrap_level, master_seed, stream};
}

ExperimentConfig parse_config(const json& j) {
  reject_unknown(j,
                 {"d", "L", "law", "xi", "mu", "test_function", "eps_list", "lambda_list", "p_list", "n_replicas",
                  "master_seed", "solver", "stein", "covariance", "bootstrap", "lemma", "output_dir"},
                 "config");
  ExperimentConfig c;
  read(j, "d", c.d, "config");
  read(j, "L", c.L, "config");
  if (c.d < 3) throw ConfigError("d must be >= 3");
  if (c.L < 2) throw ConfigError("L must be >= 2");
  if (j.contains("law")) {
    const auto& l = j.at("law");
    reject_unknown(l, {"kind", "lambda_min", "lambda_max", "ramp_half_width"}, "law");
    std::string kind(to_string(c.law.kind));
    read(l, "kind", kind, "law");
    c.law.kind = parse_law_kind(kind);
    read(l, "lambda_min", c.law.lambda_min, "law");
    read(l, "lambda_max", c.law.lambda_max, "law");
    read(l, "ramp_half_width", c.law.ramp_half_width, "law");
  }
  c.xi.assign(static_cast<std::size_t>(c.d), 0.0);
  c.xi[0] = 1.0;
  read(j, "xi", c.xi, "config");
  read(j, "mu", c.mu, "config");
  c.center.assign(static_cast<std::size_t>(c.d), 0.0);
  if (j.contains("test_function")) {
    const auto& t = j.at("test_function");
    reject_unknown(t, {"kind", "center"}, "test_function");
    std::string kind(to_string(c.test_function));
    read(t, "kind", kind, "test_function");
    c.test_function = parse_test_function_kind(kind);
    read(t, "center", c.center, "test_function");
  }
  read(j, "lambda_list", c.lambda_list, "config");
  read(j, "p_list", c.p_list, "config");
  read(j, "n_replicas", c.n_replicas, "config");
  read(j, "master_seed", c.master_seed, "config");
  if (j.contains("eps_list")) {
    read(j, "eps_list", c.eps_list, "config");
  } else {
    // Largest admissible subset of the default grid.
    if (c.center.size() == static_cast<std::size_t>(c.d) && !c.lambda_list.empty()) {
      const TestFunction f = c.make_test_function();
      const double lam = *std::max_element(c.lambda_list.begin(), c.lambda_list.end());
      for (double e : {0.25, 0.125, 0.0625, 0.03125}) {
        if (lam * f.support_extent() / e < 0.5 * c.L) c.eps_list.push_back(e);
      }
    }
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    reject_unknown(s, {"rel_tol", "max_iter", "preconditioner"}, "solver");
    read(s, "rel_tol", c.solver.rel_tol, "solver");
    read(s, "max_iter", c.solver.max_iter, "solver");
    std::string pc(to_string(c.solver.preconditioner));
    read(s, "preconditioner", pc, "solver");
    c.solver.preconditioner = parse_preconditioner(pc);
  }
  if (j.contains("stein")) {
    const auto& s = j.at("stein");
    reject_unknown(s, {"R", "m", "radius_profile", "decay"}, "stein");
    read(s, "R", c.stein.R, "stein");
    read(s, "m", c.stein.m, "stein");
    read(s, "radius_profile", c.stein.radius_profile, "stein");
    read(s, "decay", c.stein.decay, "stein");
  }
  if (c.stein.R == 0) c.stein.R = c.L / 2;
  if (c.stein.radius_profile.empty()) {
    for (int r = 2; r < c.stein.R; r *= 2) c.stein.radius_profile.push_back(r);
    c.stein.radius_profile.push_back(c.stein.R);
  }
  if (j.contains("covariance")) {
    const auto& s = j.at("covariance");
    reject_unknown(s, {"r_min", "r_max", "table_radius", "model", "weighting", "fit_offset"}, "covariance");
    read(s, "r_min", c.covariance.r_min, "covariance");
    read(s, "r_max", c.covariance.r_max, "covariance");
    read(s, "table_radius", c.covariance.table_radius, "covariance");
    std::string model = c.covariance.model == KernelModel::periodic_lattice ? "periodic_lattice" : "continuum";
    read(s, "model", model, "covariance");
    if (model == "periodic_lattice") {
      c.covariance.model = KernelModel::periodic_lattice;
    } else if (model == "continuum") {
      c.covariance.model = KernelModel::continuum;
    } else {
      throw ConfigError("covariance.model must be periodic_lattice or continuum");
    }
    std::string weighting = c.covariance.weighting == FitWeighting::relative ? "relative" : "uniform";
    read(s, "weighting", weighting, "covariance");
    if (weighting == "relative") {
      c.covariance.weighting = FitWeighting::relative;
    } else if (weighting == "uniform") {
      c.covariance.weighting = FitWeighting::uniform;
    } else {
      throw ConfigError("covariance.weighting must be relative or uniform");
    }
    read(s, "fit_offset", c.covariance.fit_offset, "covariance");
  }
  if (j.contains("bootstrap")) {
    const auto& s = j.at("bootstrap");
    reject_unknown(s, {"resamples", "level", "noise_simulations"}, "bootstrap");
    read(s, "resamples", c.bootstrap_resamples, "bootstrap");
    read(s, "level", c.bootstrap_level, "bootstrap");
    read(s, "noise_simulations", c.noise_simulations, "bootstrap");
  }

  c.lemma.d = c.d;
  c.lemma.xesum.d = c.d;
  c.lemma.xesum.eps = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  c.lemma.xesum.scaled_norms = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
  c.lemma.xesum.directions = default_directions(c.d);
  c.lemma.eepsum.d = c.d;
  c.lemma.eepsum.eps = {1.0 / 8, 1.0 / 16, 1.0 / 32};
  c.lemma.eepsum.p_list = {2.0 * (c.d - 1), static_cast<double>(c.d)};
  c.lemma.eepsum.scaled_norms = {0.0, 1.0, 2.0};
  c.lemma.eepsum.directions = {default_directions(c.d).front(), default_directions(c.d).back()};
  if (c.d != 3) {
    // Tighter radius limits outside d = 3.
    const double rmax = max_summation_radius(c.d);
    auto keep = [](std::vector<double>& eps, double limit) {
      std::erase_if(eps, [&](double e) { return 1.0 / e > limit; });
    };
    keep(c.lemma.xesum.eps, rmax);
    keep(c.lemma.eepsum.eps, rmax / c.lemma.eepsum.radius_factor);
  }
  if (j.contains("lemma")) {
    const auto& s = j.at("lemma");
    reject_unknown(s, {"xesum", "eepsum"}, "lemma");
    if (s.contains("xesum")) c.lemma.xesum = parse_grid(s.at("xesum"), c.lemma.xesum, grid_name(Lemma::xesum));
    if (s.contains("eepsum")) c.lemma.eepsum = parse_grid(s.at("eepsum"), c.lemma.eepsum, grid_name(Lemma::eepsum));
  }
  read(j, "output_dir", c.output_dir, "config");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

ExperimentConfig default_config() { return parse_config(json::object()); }

void validate(const ExperimentConfig& c) {
  const LatticeShape shape = c.shape();
  c.law.validate();
  c.solver.validate();
  if (c.xi.size() != static_cast<std::size_t>(c.d)) throw ConfigError("xi must have d components");
  if (c.center.size() != static_cast<std::size_t>(c.d)) throw ConfigError("test_function.center must have d components");
  if (!(c.mu >= 0.0)) throw ConfigError("mu must be >= 0");
  if (c.n_replicas < 2) throw ConfigError("n_replicas must be >= 2");
  if (c.eps_list.empty()) throw GuardError("no admissible eps for L = " + std::to_string(c.L));
  if (c.lambda_list.empty()) throw ConfigError("lambda_list must not be empty");
  std::set<double> seen;
  for (double e : c.eps_list) {
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("eps values must lie in (0, 1)");
    if (!seen.insert(e).second) throw ConfigError("eps_list has duplicates");
  }
  for (int p : c.p_list) {
    if (p < 1 || p > 8) throw ConfigError("p_list entries must be integers in [1, 8]");
  }
  if (c.bootstrap_resamples < 10) throw ConfigError("bootstrap.resamples must be >= 10");
  if (!(c.bootstrap_level > 0.0 && c.bootstrap_level < 1.0)) throw ConfigError("bootstrap.level must lie in (0, 1)");
  if (c.noise_simulations < 10) throw ConfigError("bootstrap.noise_simulations must be >= 10");
  const TestFunction f = c.make_test_function();
  for (const Probe& p : c.probes()) check_admissible(shape, f, p.lambda, p.eps);
  if (c.stein.R < 1 || 2 * c.stein.R > c.L) throw ConfigError("stein.R must lie in [1, L/2]");
  for (int r : c.stein.radius_profile) {
    if (r < 1 || 2 * r > c.L) throw ConfigError("stein.radius_profile entries must lie in [1, L/2]");
  }
  if (c.stein.m < 8) throw ConfigError("stein.m must be >= 8");
  if (!(c.covariance.r_min > 0.0 && c.covariance.r_max >= c.covariance.r_min)) {
    throw ConfigError("covariance needs 0 < r_min <= r_max");
  }
  for (double e : c.lemma.xesum.eps) {
    if (!(e > 0.0 && e <= 1.0)) throw ConfigError("lemma.xesum eps must lie in (0, 1]");
    if (1.0 / e > max_summation_radius(c.d)) throw GuardError("lemma.xesum eps below the exact-summation limit");
  }
  for (double e : c.lemma.eepsum.eps) {
    if (!(e > 0.0 && e <= 0.5)) throw ConfigError("lemma.eepsum eps must lie in (0, 1/2]");
    if (c.lemma.eepsum.radius_factor < 4.0) throw GuardError("lemma.eepsum radius_factor must be >= 4");
    if (c.lemma.eepsum.radius_factor / e > max_summation_radius(c.d)) {
      throw GuardError("lemma.eepsum radius exceeds the exact-summation limit");
    }
  }
  for (double p : c.lemma.eepsum.p_list) {
    if (!(p > 0.0)) throw ConfigError("lemma.eepsum p values must be > 0");
  }
}

nlohmann::ordered_json to_json(const ExperimentConfig& c, bool include_output_dir) {
  nlohmann::ordered_json j;
  j["d"] = c.d;
  j["L"] = c.L;
  j["law"] = {{"kind", std::string(to_string(c.law.kind))},
              {"lambda_min", c.law.lambda_min},
              {"lambda_max", c.law.lambda_max},
              {"ramp_half_width", c.law.ramp_half_width}};
  j["xi"] = c.xi;
  j["mu"] = c.mu;
  j["test_function"] = {{"kind", std::string(to_string(c.test_function))}, {"center", c.center}};
  j["eps_list"] = c.eps_list;
  j["lambda_list"] = c.lambda_list;
  j["p_list"] = c.p_list;
  j["n_replicas"] = c.n_replicas;
  j["master_seed"] = c.master_seed;
  j["solver"] = {{"rel_tol", c.solver.rel_tol},
                 {"max_iter", c.solver.max_iter},
                 {"preconditioner", std::string(to_string(c.solver.preconditioner))}};
  j["stein"] = {{"R", c.stein.R}, {"m", c.stein.m}, {"radius_profile", c.stein.radius_profile}, {"decay", c.stein.decay}};
  j["covariance"] = {{"r_min", c.covariance.r_min},
                     {"r_max", c.covariance.r_max},
                     {"table_radius", c.covariance.table_radius},
                     {"model", c.covariance.model == KernelModel::periodic_lattice ? "periodic_lattice" : "continuum"},
                     {"weighting", c.covariance.weighting == FitWeighting::relative ? "relative" : "uniform"},
                     {"fit_offset", c.covariance.fit_offset}};
  j["bootstrap"] = {{"resamples", c.bootstrap_resamples},
                    {"level", c.bootstrap_level},
                    {"noise_simulations", c.noise_simulations}};
  j["lemma"] = {{"xesum", grid_json(c.lemma.xesum, false)}, {"eepsum", grid_json(c.lemma.eepsum, true)}};
  if (include_output_dir) j["output_dir"] = c.output_dir;
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = to_json(cfg, false).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

}  // namespace corrlab::cli
