#include "corrlab/environment.hpp"

#include <cmath>
#include <fstream>
#include <functional>

#include "corrlab/errors.hpp"
#include "corrlab/field_io.hpp"
#include "corrlab/philox.hpp"
#include "json.hpp"

namespace corrlab {

std::string_view to_string(LawKind kind) {
  switch (kind) {
    case LawKind::tanh:
      return "tanh";
    case LawKind::affine_clamped_smooth:
      return "affine-clamped-smooth";
  }
  return "unknown";
}

LawKind parse_law_kind(std::string_view name) {
  if (name == "tanh") return LawKind::tanh;
  if (name == "affine-clamped-smooth") return LawKind::affine_clamped_smooth;
  throw ConfigError("unknown conductance law kind '" + std::string(name) + "'");
}

void ConductanceLaw::validate() const {
  if (!(lambda_min > 0.0) || !std::isfinite(lambda_min)) throw ConfigError("lambda_min must be > 0");
  if (!(lambda_max >= lambda_min) || !std::isfinite(lambda_max)) {
    throw ConfigError("lambda_max must be >= lambda_min");
  }
  if (kind == LawKind::affine_clamped_smooth && !(ramp_half_width > 0.0)) {
    throw ConfigError("ramp_half_width must be > 0");
  }
}

double ConductanceLaw::eval(double z, int order) const {
  if (order < 0 || order > 2) throw PreconditionError("law derivative order must be 0, 1 or 2");
  const double span = lambda_max - lambda_min;
  switch (kind) {
    case LawKind::tanh: {
      const double mid = 0.5 * (lambda_min + lambda_max);
      const double half = 0.5 * span;
      const double t = std::tanh(z);
      if (order == 0) return mid + half * t;
      if (order == 1) return half * (1.0 - t * t);
      return -2.0 * half * t * (1.0 - t * t);
    }
    case LawKind::affine_clamped_smooth: {
      const double w = ramp_half_width;
      const double t = (z + w) / (2.0 * w);
      if (t <= 0.0) return order == 0 ? lambda_min : 0.0;
      if (t >= 1.0) return order == 0 ? lambda_max : 0.0;
      if (order == 0) return lambda_min + span * t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
      if (order == 1) return span * 30.0 * t * t * (1.0 - t) * (1.0 - t) / (2.0 * w);
      return span * 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (4.0 * w * w);
    }
  }
  throw ConfigError("unknown conductance law kind");
}

double ConductanceLaw::sup_first_derivative() const {
  const double span = lambda_max - lambda_min;
  switch (kind) {
    case LawKind::tanh:
      return 0.5 * span;
    case LawKind::affine_clamped_smooth:
      return span * (30.0 / 16.0) / (2.0 * ramp_half_width);
  }
  return 0.0;
}

double ConductanceLaw::sup_second_derivative() const {
  const double span = lambda_max - lambda_min;
  switch (kind) {
    case LawKind::tanh:
      // |tanh''| peaks at tanh(z) = 1/sqrt(3) with value 4 / (3 sqrt 3).
      return 0.5 * span * 4.0 / (3.0 * std::sqrt(3.0));
    case LawKind::affine_clamped_smooth:
      // |S''| peaks at t(1-t) = 1/6 with value 10 / sqrt 3.
      return span * (10.0 / std::sqrt(3.0)) / (4.0 * ramp_half_width * ramp_half_width);
  }
  return 0.0;
}

double ConductanceLaw::geometric_mean() const { return std::sqrt(lambda_min * lambda_max); }

double law_eval(const ConductanceLaw& law, double z, int order) { return law.eval(z, order); }

double gaussian_driver(const SeedSpec& seed, std::uint64_t edge) {
  const auto block = Philox4x32::block(
      {static_cast<std::uint32_t>(edge), static_cast<std::uint32_t>(edge >> 32), seed.replica_index,
       static_cast<std::uint32_t>(StreamTag::environment)},
      Philox4x32::key_from(seed.master_seed));
  return normal_from_block(block);
}

EdgeField Environment::law_derivative(int order) const {
  EdgeField out(shape);
  for (std::size_t e = 0; e < out.size(); ++e) out.values[e] = law.eval(zeta.values[e], order);
  return out;
}

std::uint64_t Environment::fingerprint() const {
  const std::string_view bytes(reinterpret_cast<const char*>(a.values.data()),
                               a.values.size() * sizeof(double));
  return std::hash<std::string_view>{}(bytes);
}

Environment make_environment(EdgeField zeta, const ConductanceLaw& law, const SeedSpec& seed) {
  law.validate();
  Environment env;
  env.shape = zeta.shape;
  env.a = EdgeField(zeta.shape);
  for (std::size_t e = 0; e < zeta.size(); ++e) env.a.values[e] = law.eval(zeta.values[e], 0);
  env.zeta = std::move(zeta);
  env.law = law;
  env.seed = seed;
  return env;
}

Environment sample_environment(const LatticeShape& shape, const ConductanceLaw& law,
                               const SeedSpec& seed) {
  EdgeField zeta(shape);
  for (std::size_t e = 0; e < zeta.size(); ++e) zeta.values[e] = gaussian_driver(seed, e);
  return make_environment(std::move(zeta), law, seed);
}

Environment perturb_edge(const Environment& env, std::size_t edge, double h) {
  if (!std::isfinite(h)) throw PreconditionError("perturbation must be finite");
  if (edge >= env.zeta.size()) throw PreconditionError("edge index out of range");
  Environment out = env;
  out.zeta.values[edge] += h;
  out.a.values[edge] = env.law.eval(out.zeta.values[edge], 0);
  return out;
}

Environment perturb_edge(const Environment& env, const EdgeId& edge, double h) {
  return perturb_edge(env, edge.index(env.shape), h);
}

void save_environment(const std::filesystem::path& dir, const std::string& stem, const Environment& env) {
  std::filesystem::create_directories(dir);
  write_field(dir / (stem + ".zeta.bin"), env.zeta);
  write_field(dir / (stem + ".a.bin"), env.a);
  nlohmann::ordered_json j;
  j["d"] = env.shape.d;
  j["L"] = env.shape.L;
  j["law"] = {{"kind", std::string(to_string(env.law.kind))},
              {"lambda_min", env.law.lambda_min},
              {"lambda_max", env.law.lambda_max},
              {"ramp_half_width", env.law.ramp_half_width},
              {"sup_first_derivative", env.law.sup_first_derivative()},
              {"sup_second_derivative", env.law.sup_second_derivative()}};
  j["seed"] = {{"master_seed", env.seed.master_seed}, {"replica_index", env.seed.replica_index}};
  j["fields"] = {{"zeta", stem + ".zeta.bin"}, {"a", stem + ".a.bin"}};
  std::ofstream out(dir / (stem + ".json"));
  out << j.dump(2) << '\n';
}

Environment load_environment(const std::filesystem::path& dir, const std::string& stem) {
  std::ifstream in(dir / (stem + ".json"));
  if (!in) throw Error("missing environment sidecar " + (dir / (stem + ".json")).string());
  const auto j = nlohmann::json::parse(in);
  ConductanceLaw law;
  law.kind = parse_law_kind(j.at("law").at("kind").get<std::string>());
  law.lambda_min = j.at("law").at("lambda_min").get<double>();
  law.lambda_max = j.at("law").at("lambda_max").get<double>();
  law.ramp_half_width = j.at("law").value("ramp_half_width", 2.0);
  law.validate();
  Environment env;
  env.zeta = read_edge_field(dir / (stem + ".zeta.bin"));
  env.a = read_edge_field(dir / (stem + ".a.bin"));
  env.shape = env.zeta.shape;
  if (!(env.a.shape == env.shape)) throw Error("environment fields disagree on lattice shape");
  env.law = law;
  env.seed.master_seed = j.at("seed").at("master_seed").get<std::uint64_t>();
  env.seed.replica_index = j.at("seed").at("replica_index").get<std::uint32_t>();
  return env;
}

}  // namespace corrlab
