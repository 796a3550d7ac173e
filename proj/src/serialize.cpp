#include "measurezip/serialize.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

namespace measurezip {

namespace {

BaseSpace space_from_name(const std::string& name) {
  for (int d : {2, 3}) {
    if (name == BaseSpace::euclidean(d).name()) return BaseSpace::euclidean(d);
    if (name == BaseSpace::oriented(d).name()) return BaseSpace::oriented(d);
  }
  throw ParseError("unknown base space '" + name + "'");
}

Json matrix_to_json(const PointMatrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

PointMatrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j.front().size()) : 0;
  PointMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ParseError(std::string(what) + " row " + std::to_string(i) + " has the wrong length");
    }
    for (Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ParseError(std::string(what) + " entries must be numbers");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

double positive_number(const Json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string(what) + " must be a number");
  return j.get<double>();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Json measure_to_json(const DiracMeasure& mu) {
  Json j;
  j["space"] = mu.space.name();
  j["points"] = matrix_to_json(mu.points);
  j["weights"] = matrix_to_json(mu.weights);
  return j;
}

DiracMeasure measure_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("space") || !j.contains("points") || !j.contains("weights")) {
    throw ParseError("measure JSON needs space, points and weights");
  }
  DiracMeasure mu{space_from_name(j.at("space").get<std::string>()), matrix_from_json(j.at("points"), "points"),
                  matrix_from_json(j.at("weights"), "weights")};
  try {
    mu.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("invalid measure: ") + e.what());
  }
  return mu;
}

void write_measure_csv(std::ostream& out, const DiracMeasure& mu) {
  for (Index c = 0; c < mu.points.cols(); ++c) out << (c ? "," : "") << 'x' << c;
  for (Index c = 0; c < mu.weights.cols(); ++c) out << ",w" << c;
  out << '\n';
  for (Index i = 0; i < mu.size(); ++i) {
    for (Index c = 0; c < mu.points.cols(); ++c) out << (c ? "," : "") << format_double(mu.points(i, c));
    for (Index c = 0; c < mu.weights.cols(); ++c) out << ',' << format_double(mu.weights(i, c));
    out << '\n';
  }
}

Json controls_to_json(const ControlSet& c) {
  Json j;
  j["indices"] = c.indices;
  j["sampler"] = sampler_name(c.sampler);
  j["seed"] = c.seed;
  Json params = Json::object();
  for (const auto& [k, v] : c.params) params[k] = v;
  j["params"] = std::move(params);
  return j;
}

ControlSet controls_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("indices")) throw ParseError("control set JSON needs indices");
  ControlSet c;
  c.indices = j.at("indices").get<std::vector<Index>>();
  if (j.contains("sampler")) {
    const auto name = j.at("sampler").get<std::string>();
    const auto kind = sampler_from_name(name);
    if (!kind) throw ParseError("unknown sampler '" + name + "'");
    c.sampler = *kind;
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("params")) {
    for (const auto& [k, v] : j.at("params").items()) c.params[k] = v.get<double>();
  }
  return c;
}

KernelSpec kernel_from_json(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "linear_spherical") return KernelSpec::linear_spherical();
    throw ParseError("unknown kernel '" + j.get<std::string>() + "'");
  }
  if (!j.is_object() || j.size() != 1) throw ParseError("kernel must be a string or a single-key object");
  const auto entry = j.begin();
  const std::string name = entry.key();
  const Json& value = entry.value();
  try {
    if (name == "kernel") return kernel_from_json(value);
    if (name == "gaussian") return KernelSpec::gaussian(positive_number(value, "gaussian bandwidth"));
    if (name == "spherical_gaussian") {
      return KernelSpec::spherical_gaussian(positive_number(value, "spherical_gaussian bandwidth"));
    }
    if (name == "linear_spherical") return KernelSpec::linear_spherical();
    if (name == "sum_of_gaussians") {
      if (!value.is_array()) throw ParseError("sum_of_gaussians expects an array of bandwidths");
      std::vector<double> sigmas;
      for (const auto& s : value) sigmas.push_back(positive_number(s, "sum_of_gaussians bandwidth"));
      return KernelSpec::sum_of_gaussians(std::move(sigmas));
    }
    if (name == "product") {
      if (!value.is_object() || !value.contains("spatial") || !value.contains("spherical")) {
        throw ParseError("product kernel needs spatial and spherical parts");
      }
      return KernelSpec::product(kernel_from_json(value.at("spatial")), kernel_from_json(value.at("spherical")));
    }
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("invalid kernel: ") + e.what());
  }
  throw ParseError("unknown kernel '" + name + "'");
}

Json kernel_to_json(const KernelSpec& k) {
  switch (k.kind()) {
    case KernelSpec::Kind::Gaussian: return Json{{"gaussian", k.bandwidths()[0]}};
    case KernelSpec::Kind::SphericalGaussian: return Json{{"spherical_gaussian", k.bandwidths()[0]}};
    case KernelSpec::Kind::LinearSpherical: return Json("linear_spherical");
    case KernelSpec::Kind::SumOfGaussians: return Json{{"sum_of_gaussians", k.bandwidths()}};
    case KernelSpec::Kind::Product: {
      Json inner;
      inner["spatial"] = kernel_to_json(k.spatial());
      inner["spherical"] = kernel_to_json(k.spherical());
      return Json{{"product", inner}};
    }
  }
  return Json();
}

DeformationConfig deformation_from_json(const Json& j) {
  DeformationConfig cfg;
  if (!j.is_object() || !j.contains("kernel")) {
    cfg.kernel_v = kernel_from_json(j);
    cfg.validate();
    return cfg;
  }
  cfg.kernel_v = kernel_from_json(j.at("kernel"));
  try {
    if (j.contains("n_steps")) cfg.n_steps = j.at("n_steps").get<int>();
    if (j.contains("lambda")) cfg.lambda_match = j.at("lambda").get<double>();
    if (j.contains("max_iters")) cfg.max_iters = j.at("max_iters").get<int>();
    if (j.contains("rel_tol")) cfg.rel_tol = j.at("rel_tol").get<double>();
    if (j.contains("step_rule")) {
      const auto& s = j.at("step_rule");
      if (s.is_string() && s.get<std::string>() == "backtracking") {
        cfg.step_rule = StepRule::Backtracking;
      } else if (s.is_object() && s.contains("fixed")) {
        cfg.step_rule = StepRule::Fixed;
        cfg.fixed_eta = s.at("fixed").get<double>();
      } else {
        throw ParseError("step_rule must be \"backtracking\" or {\"fixed\": eta}");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid deformation config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

Json deformation_to_json(const DeformationConfig& cfg) {
  Json j;
  j["kernel"] = kernel_to_json(cfg.kernel_v);
  j["n_steps"] = cfg.n_steps;
  j["lambda"] = cfg.lambda_match;
  j["max_iters"] = cfg.max_iters;
  j["rel_tol"] = cfg.rel_tol;
  if (cfg.step_rule == StepRule::Fixed) {
    j["step_rule"] = Json{{"fixed", cfg.fixed_eta}};
  } else {
    j["step_rule"] = "backtracking";
  }
  j["energy_quadrature"] = "left_endpoint";
  return j;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace measurezip
