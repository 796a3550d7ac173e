#include "measurezip/cli.hpp"

#include "measurezip/compress.hpp"
#include "measurezip/registration.hpp"
#include "measurezip/serialize.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

namespace measurezip {

namespace {

using Clock = std::chrono::steady_clock;

class Timings {
 public:
  void start(std::string phase) {
    phase_ = std::move(phase);
    t0_ = Clock::now();
  }
  void stop() { record_.emplace_back(phase_, std::chrono::duration<double>(Clock::now() - t0_).count()); }
  [[nodiscard]] Json json() const {
    Json j = Json::object();
    for (const auto& [k, v] : record_) j[k] = v;
    return j;
  }

 private:
  std::string phase_;
  Clock::time_point t0_;
  std::vector<std::pair<std::string, double>> record_;
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::string& path, const std::string& command, const std::vector<std::string>& args,
                    const Json& config, std::uint64_t seed, const Timings& timings) {
  Json m;
  m["command"] = command;
  m["argv"] = args;
  m["config"] = config;
  m["seed"] = seed;
  m["version"] = kVersion;
  m["timings"] = timings.json();
  m["timestamp"] = utc_timestamp();
  write_json_file(path, m);
}

// "3", "1,2,5" or "1..20"
std::vector<std::uint64_t> parse_u64_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) {
      const auto dots = item.find("..");
      if (dots == std::string::npos) {
        out.push_back(std::stoull(item));
      } else {
        const auto lo = std::stoull(item.substr(0, dots));
        const auto hi = std::stoull(item.substr(dots + 2));
        if (hi < lo) throw InvalidArgument("empty range '" + item + "'");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
      }
    }
  } catch (const std::logic_error&) {
    throw InvalidArgument("cannot parse integer list '" + text + "'");
  }
  if (out.empty()) throw InvalidArgument("empty integer list");
  return out;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// A kernel argument is a file path, or inline JSON when it starts with { or ".
KernelSpec load_kernel(const std::string& arg) {
  if (!arg.empty() && (arg.front() == '{' || arg.front() == '"')) {
    try {
      return kernel_from_json(Json::parse(arg));
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidArgument(std::string("cannot parse inline kernel JSON: ") + e.what());
    }
  }
  return kernel_from_json(read_json_file(arg));
}

Json load_json_arg(const std::string& arg) {
  if (!arg.empty() && (arg.front() == '{' || arg.front() == '"')) return Json::parse(arg);
  return read_json_file(arg);
}

Representation parse_rep(const std::string& name) {
  const auto rep = representation_from_name(name);
  if (!rep) throw InvalidArgument("unknown representation '" + name + "'");
  return *rep;
}

SamplerKind parse_sampler(const std::string& name) {
  const auto kind = sampler_from_name(name);
  if (!kind) throw InvalidArgument("unknown sampler '" + name + "'");
  return *kind;
}

TriangleMesh load_normalized(const std::string& path, double normalize) {
  TriangleMesh mesh = load_mesh(path);
  return normalize > 0.0 ? center_and_scale(mesh, normalize) : mesh;
}

bool is_json_path(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".json";
}

struct InputArgs {
  std::string input;
  std::string rep = "varifold";
  std::string kernel;
  double normalize = 0.0;

  void add(CLI::App* app) {
    app->add_option("--input,-i", input, "Mesh (obj/ply/off) or measure JSON")->required()->check(CLI::ExistingFile);
    app->add_option("--rep", rep, "Representation")->check(CLI::IsMember({"current", "varifold"}));
    app->add_option("--kernel,-k", kernel, "Kernel JSON file or inline JSON")->required();
    app->add_option("--normalize", normalize, "Center and scale the mesh to this largest box edge")
        ->check(CLI::PositiveNumber);
  }

  [[nodiscard]] DiracMeasure measure() const {
    if (is_json_path(input)) {
      // A compress result wraps its measure; accept it as input directly.
      const Json j = read_json_file(input);
      return measure_from_json(j.is_object() && j.contains("measure") ? j.at("measure") : j);
    }
    const TriangleMesh mesh = load_normalized(input, normalize);
    return parse_rep(rep) == Representation::Current ? current_of_mesh(mesh) : varifold_of_mesh(mesh);
  }

  [[nodiscard]] Json json() const {
    Json j;
    j["input"] = input;
    j["rep"] = is_json_path(input) ? Json("measure") : Json(rep);
    j["normalize"] = normalize;
    return j;
  }
};

struct SamplerArgs {
  std::string sampler = "rls";
  SamplerConfig cfg;
  std::uint64_t seed = 1;

  void add(CLI::App* app, bool with_sampler = true) {
    if (with_sampler) {
      app->add_option("--sampler", sampler, "uniform, exact_rls, rls or kdpp")
          ->check(CLI::IsMember({"uniform", "exact_rls", "rls", "recursive_rls", "kdpp", "mcmc_kdpp", "dac"}));
    }
    app->add_option("--rank", cfg.rank, "Target rank S")->check(CLI::PositiveNumber);
    app->add_option("--delta", cfg.delta, "Failure probability, in (0, 1/32)");
    app->add_option("--lambda-reg", cfg.lambda_reg, "Ridge parameter (0 derives it from the rank)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--mcmc-iters", cfg.mcmc_iterations, "MCMC swap proposals")->check(CLI::NonNegativeNumber);
    app->add_option("--seed", seed, "Random seed");
  }

  [[nodiscard]] Json json() const {
    Json j;
    j["sampler"] = sampler;
    j["rank"] = cfg.rank;
    j["delta"] = cfg.delta;
    j["lambda_reg"] = cfg.lambda_reg;
    j["mcmc_iters"] = cfg.mcmc_iterations;
    if (cfg.m_exact) j["m"] = *cfg.m_exact;
    return j;
  }
};

struct Context {
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
};

void emit(Context& ctx, const std::string& out_path, const Json& result) {
  if (out_path.empty()) {
    ctx.out << result.dump(2) << '\n';
  } else {
    write_json_file(out_path, result);
  }
}

// --- compress ---------------------------------------------------------------

struct CompressArgs {
  InputArgs in;
  SamplerArgs s;
  std::optional<Index> m;
  std::optional<double> tau;
  bool tau_relative = false;
  bool evaluate = false;
  std::string out;
};

int cmd_compress(Context& ctx, const CompressArgs& a) {
  Timings tm;
  tm.start("load");
  const DiracMeasure mu = a.in.measure();
  const KernelSpec spec = load_kernel(a.in.kernel);
  tm.stop();

  const SamplerKind kind = parse_sampler(a.s.sampler);
  SamplerConfig cfg = a.s.cfg;
  if (a.m) {
    if (*a.m > mu.size()) throw InvalidArgument("--m exceeds the number of atoms");
    cfg.m_exact = *a.m;
  }

  Json result;
  result["command"] = "compress";
  result["n_atoms"] = mu.size();
  result["kernel"] = kernel_to_json(spec);

  tm.start("compress");
  CompressionResult res;
  if (a.tau) {
    TraceSearchOptions opt;
    opt.tau = a.tau_relative ? *a.tau * static_cast<double>(mu.size()) : *a.tau;
    opt.sampler = kind;
    opt.sampler_config = cfg;
    opt.seed = a.s.seed;
    const auto search = choose_m_trace(mu, spec, opt);
    const auto t0 = Clock::now();
    res.controls = search.controls;
    res.compressed = project_measure(mu, res.controls, spec);
    res.trace_error = search.trajectory.back().second;
    res.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    result["tau"] = opt.tau;
  } else {
    res = compress(mu, spec, kind, cfg, a.s.seed, false);
  }
  tm.stop();
  if (a.evaluate) {
    tm.start("evaluate");
    res.squared_error = compression_error2(mu, res.compressed, spec);
    tm.stop();
  }

  result["m"] = res.controls.size();
  result["trace_error"] = res.trace_error;
  if (res.squared_error) {
    result["squared_error"] = *res.squared_error;
    result["dual_norm2"] = dual_norm2(mu, spec);
  }
  result["wall_time"] = res.wall_time;
  result["controls"] = controls_to_json(res.controls);
  result["measure"] = measure_to_json(res.compressed);

  Json config = a.in.json();
  config["kernel"] = kernel_to_json(spec);
  config["sampler"] = a.s.json();
  config["evaluate"] = a.evaluate;
  if (a.tau) config["tau"] = *a.tau, config["tau_relative"] = a.tau_relative;

  tm.start("write");
  if (a.out.empty()) {
    // Keep stdout readable: the measure itself only goes to files.
    result.erase("measure");
  }
  emit(ctx, a.out, result);
  tm.stop();
  if (!a.out.empty()) write_manifest(a.out + ".manifest.json", "compress", ctx.args, config, a.s.seed, tm);
  return 0;
}

// --- choose-m ---------------------------------------------------------------

struct ChooseArgs {
  InputArgs in;
  SamplerArgs s;
  double tau = 0.0;
  bool tau_relative = false;
  std::string growth = "double";
  bool independent = false;
  std::string out;
};

int cmd_choose_m(Context& ctx, const ChooseArgs& a) {
  Timings tm;
  tm.start("load");
  const DiracMeasure mu = a.in.measure();
  const KernelSpec spec = load_kernel(a.in.kernel);
  tm.stop();

  TraceSearchOptions opt;
  opt.tau = a.tau_relative ? a.tau * static_cast<double>(mu.size()) : a.tau;
  opt.sampler = parse_sampler(a.s.sampler);
  opt.sampler_config = a.s.cfg;
  opt.seed = a.s.seed;
  opt.growth = *growth_from_name(a.growth);
  opt.nested = !a.independent;

  tm.start("search");
  const auto t0 = Clock::now();
  const auto search = choose_m_trace(mu, spec, opt);
  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
  tm.stop();

  Json result;
  result["command"] = "choose-m";
  result["n_atoms"] = mu.size();
  result["tau"] = opt.tau;
  result["m"] = search.controls.size();
  result["trace_error"] = search.trajectory.back().second;
  result["nested"] = search.nested;
  result["growth"] = growth_name(search.growth);
  Json traj = Json::array();
  for (const auto& [m, t] : search.trajectory) traj.push_back(Json{{"m", m}, {"trace_error", t}});
  result["trajectory"] = traj;
  result["controls"] = controls_to_json(search.controls);
  result["wall_time"] = wall;

  Json config = a.in.json();
  config["kernel"] = kernel_to_json(spec);
  config["sampler"] = a.s.json();
  config["tau"] = a.tau;
  config["tau_relative"] = a.tau_relative;
  config["growth"] = a.growth;
  config["nested"] = !a.independent;

  emit(ctx, a.out, result);
  if (!a.out.empty()) write_manifest(a.out + ".manifest.json", "choose-m", ctx.args, config, a.s.seed, tm);
  return 0;
}

// --- error-curve ------------------------------------------------------------

struct CurveArgs {
  InputArgs in;
  SamplerArgs s;
  std::string m_list;
  std::string samplers = "rls,uniform";
  std::string seeds = "1";
  std::string out;
};

int cmd_error_curve(Context& ctx, const CurveArgs& a) {
  Timings tm;
  tm.start("load");
  const DiracMeasure mu = a.in.measure();
  const KernelSpec spec = load_kernel(a.in.kernel);
  tm.stop();

  std::vector<Index> ms;
  for (auto v : parse_u64_list(a.m_list)) {
    if (v == 0) throw InvalidArgument("--m values must be >= 1");
    ms.push_back(static_cast<Index>(v));
  }
  std::vector<SamplerKind> kinds;
  for (const auto& name : split_names(a.samplers)) kinds.push_back(parse_sampler(name));
  if (kinds.empty()) throw InvalidArgument("--samplers is empty");
  const auto seeds = parse_u64_list(a.seeds);

  tm.start("curve");
  const auto rows = error_curve(mu, spec, ms, kinds, seeds, a.s.cfg);
  tm.stop();

  tm.start("write");
  if (a.out.empty()) {
    write_error_curve_csv(ctx.out, rows);
  } else {
    std::ofstream f(a.out);
    if (!f) throw Error("cannot write " + a.out);
    write_error_curve_csv(f, rows);
  }
  tm.stop();

  if (!a.out.empty()) {
    Json config = a.in.json();
    config["kernel"] = kernel_to_json(spec);
    config["m"] = ms;
    config["samplers"] = split_names(a.samplers);
    config["seeds"] = seeds;
    config["delta"] = a.s.cfg.delta;
    config["lambda_reg"] = a.s.cfg.lambda_reg;
    config["mcmc_iters"] = a.s.cfg.mcmc_iterations;
    write_manifest(a.out + ".manifest.json", "error-curve", ctx.args, config, seeds.front(), tm);
  }
  return 0;
}

// --- match ------------------------------------------------------------------

struct MatchArgs {
  std::string template_path;
  std::string target_path;
  std::string rep = "varifold";
  std::string kernel;
  std::string defkernel;
  std::optional<double> lambda;
  std::optional<Index> m_template;
  std::optional<Index> m_target;
  std::optional<int> steps;
  std::optional<int> iters;
  std::string sampler = "rls";
  std::uint64_t seed = 1;
  double normalize = 0.0;
  std::string out;
  std::string deformed;
};

int cmd_match(Context& ctx, const MatchArgs& a) {
  Timings tm;
  tm.start("load");
  const TriangleMesh tmpl = load_normalized(a.template_path, a.normalize);
  const TriangleMesh target = load_normalized(a.target_path, a.normalize);
  DeformationConfig cfg = deformation_from_json(load_json_arg(a.defkernel));
  if (a.lambda) cfg.lambda_match = *a.lambda;
  if (a.steps) cfg.n_steps = *a.steps;
  if (a.iters) cfg.max_iters = *a.iters;
  cfg.validate();
  MatchOptions opt;
  opt.rep = parse_rep(a.rep);
  opt.kernel_w = load_kernel(a.kernel);
  opt.m_template = a.m_template;
  opt.m_target = a.m_target;
  opt.sampler = parse_sampler(a.sampler);
  opt.seed = a.seed;
  tm.stop();

  tm.start("match");
  const MatchResult res = compressed_match(tmpl, target, cfg, opt);
  tm.stop();

  Json config;
  config["template"] = a.template_path;
  config["target"] = a.target_path;
  config["rep"] = a.rep;
  config["kernel"] = kernel_to_json(opt.kernel_w);
  config["deformation"] = deformation_to_json(cfg);
  config["m_template"] = a.m_template ? Json(*a.m_template) : Json(nullptr);
  config["m_target"] = a.m_target ? Json(*a.m_target) : Json(nullptr);
  config["sampler"] = a.sampler;
  config["normalize"] = a.normalize;

  Json result;
  result["command"] = "match";
  result["config"] = config;
  result["iterations"] = res.iterations;
  result["stop_reason"] = res.stop_reason;
  result["hausdorff"] = res.hausdorff ? Json(*res.hausdorff) : Json(nullptr);
  Json traj = Json::array();
  for (const auto& r : res.trajectory) {
    traj.push_back(Json{{"energy", r.energy}, {"data", r.data}, {"total", r.total}, {"step", r.step}});
  }
  result["objective"] = traj;
  result["control_triangles"] = res.control_triangles;
  result["carriers"] = Json::array();
  result["p0"] = Json::array();
  for (Index i = 0; i < res.p0.rows(); ++i) {
    result["carriers"].push_back({res.carriers(i, 0), res.carriers(i, 1), res.carriers(i, 2)});
    result["p0"].push_back({res.p0(i, 0), res.p0(i, 1), res.p0(i, 2)});
  }
  result["wall_time"] = res.wall_time;
  result["seconds_per_iteration"] = res.seconds_per_iteration();

  tm.start("write");
  if (!a.deformed.empty()) save_obj(a.deformed, res.deformed_template);
  if (a.out.empty()) {
    result.erase("carriers");
    result.erase("p0");
    result.erase("control_triangles");
  }
  emit(ctx, a.out, result);
  tm.stop();
  if (!a.out.empty()) write_manifest(a.out + ".manifest.json", "match", ctx.args, config, a.seed, tm);
  return 0;
}

// --- hausdorff / info -------------------------------------------------------

int cmd_hausdorff(Context& ctx, const std::string& a, const std::string& b, const std::string& manifest) {
  Timings tm;
  tm.start("hausdorff");
  const double d = hausdorff_distance(load_mesh(a).vertices, load_mesh(b).vertices);
  tm.stop();
  ctx.out << format_double(d) << '\n';
  if (!manifest.empty()) write_manifest(manifest, "hausdorff", ctx.args, Json{{"a", a}, {"b", b}}, 0, tm);
  return 0;
}

int cmd_info(Context& ctx, const std::string& path, const std::string& manifest) {
  Timings tm;
  tm.start("load");
  const TriangleMesh mesh = load_mesh(path);
  tm.stop();
  const BoundingBox box = bounding_box(mesh);
  Json j;
  j["path"] = path;
  j["n_vertices"] = mesh.num_vertices();
  j["n_triangles"] = mesh.num_triangles();
  j["bounding_box"] = {{"min", {box.lo.x(), box.lo.y(), box.lo.z()}},
                       {"max", {box.hi.x(), box.hi.y(), box.hi.z()}},
                       {"extent", {box.extent().x(), box.extent().y(), box.extent().z()}}};
  j["total_area"] = surface_area(mesh);
  ctx.out << j.dump(2) << '\n';
  if (!manifest.empty()) write_manifest(manifest, "info", ctx.args, Json{{"path", path}}, 0, tm);
  return 0;
}

}  // namespace

const std::vector<std::string>& volatile_output_fields() {
  static const std::vector<std::string> fields{"wall_time", "wall_time_s", "seconds_per_iteration", "timings",
                                               "timestamp"};
  return fields;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compress discrete currents and varifolds of triangle meshes", "measurezip"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (default: MEASUREZIP_THREADS)")
      ->check(CLI::PositiveNumber);

  CompressArgs ca;
  auto* compress_cmd = app.add_subcommand("compress", "Compress a mesh measure onto m control atoms");
  ca.in.add(compress_cmd);
  ca.s.add(compress_cmd);
  auto* m_opt = compress_cmd->add_option("--m", ca.m, "Number of control atoms")->check(CLI::PositiveNumber);
  auto* tau_opt = compress_cmd->add_option("--tau", ca.tau, "Choose m by the trace heuristic")
                      ->check(CLI::NonNegativeNumber);
  m_opt->excludes(tau_opt);
  compress_cmd->add_flag("--tau-relative", ca.tau_relative, "Interpret --tau per atom")->needs(tau_opt);
  compress_cmd->add_flag("--evaluate", ca.evaluate, "Report the squared compression error");
  compress_cmd->add_option("--out,-o", ca.out, "Output JSON");

  ChooseArgs ch;
  auto* choose_cmd = app.add_subcommand("choose-m", "Grow m until the Nystrom trace error is below tau");
  ch.in.add(choose_cmd);
  ch.s.add(choose_cmd);
  choose_cmd->add_option("--tau", ch.tau, "Trace tolerance")->required()->check(CLI::NonNegativeNumber);
  choose_cmd->add_flag("--tau-relative", ch.tau_relative, "Interpret --tau per atom");
  choose_cmd->add_option("--growth", ch.growth, "add_one or double")->check(CLI::IsMember({"add_one", "double"}));
  choose_cmd->add_flag("--independent", ch.independent, "Resample at every size instead of nesting");
  choose_cmd->add_option("--out,-o", ch.out, "Output JSON");

  CurveArgs cu;
  auto* curve_cmd = app.add_subcommand("error-curve", "Squared error and trace error over m, samplers, seeds");
  cu.in.add(curve_cmd);
  cu.s.add(curve_cmd, false);
  curve_cmd->add_option("--m", cu.m_list, "Sizes, e.g. 50,100,200")->required();
  curve_cmd->add_option("--samplers", cu.samplers, "Comma-separated samplers");
  curve_cmd->add_option("--seeds", cu.seeds, "Seeds, e.g. 1..20 or 1,2,3");
  curve_cmd->add_option("--out,-o", cu.out, "Output CSV (default stdout)");

  MatchArgs ma;
  auto* match_cmd = app.add_subcommand("match", "Compressed LDDMM matching of two meshes");
  match_cmd->add_option("--template", ma.template_path, "Template mesh")->required()->check(CLI::ExistingFile);
  match_cmd->add_option("--target", ma.target_path, "Target mesh")->required()->check(CLI::ExistingFile);
  match_cmd->add_option("--rep", ma.rep, "Representation")->check(CLI::IsMember({"current", "varifold"}));
  match_cmd->add_option("--kernel,-k", ma.kernel, "Data kernel JSON")->required();
  match_cmd->add_option("--defkernel", ma.defkernel, "Deformation kernel or config JSON")->required();
  match_cmd->add_option("--lambda", ma.lambda, "Data term weight")->check(CLI::NonNegativeNumber);
  match_cmd->add_option("--m-template", ma.m_template, "Template control atoms (omit: no compression)")
      ->check(CLI::PositiveNumber);
  match_cmd->add_option("--m-target", ma.m_target, "Target atoms after compression (omit: full target)")
      ->check(CLI::PositiveNumber);
  match_cmd->add_option("--steps", ma.steps, "Euler steps")->check(CLI::PositiveNumber);
  match_cmd->add_option("--iters", ma.iters, "Maximum iterations")->check(CLI::NonNegativeNumber);
  match_cmd->add_option("--sampler", ma.sampler, "Control sampler")
      ->check(CLI::IsMember({"uniform", "exact_rls", "rls", "recursive_rls", "kdpp", "mcmc_kdpp"}));
  match_cmd->add_option("--seed", ma.seed, "Random seed");
  match_cmd->add_option("--normalize", ma.normalize, "Center and scale both meshes")->check(CLI::PositiveNumber);
  match_cmd->add_option("--out,-o", ma.out, "Result JSON");
  match_cmd->add_option("--deformed", ma.deformed, "Write the deformed template as OBJ");

  std::string ha, hb, h_manifest;
  auto* haus_cmd = app.add_subcommand("hausdorff", "Hausdorff distance between mesh vertex sets");
  haus_cmd->add_option("a", ha, "First mesh")->required()->check(CLI::ExistingFile);
  haus_cmd->add_option("b", hb, "Second mesh")->required()->check(CLI::ExistingFile);
  haus_cmd->add_option("--manifest", h_manifest, "Write a run manifest here");

  std::string info_path, i_manifest;
  auto* info_cmd = app.add_subcommand("info", "Mesh statistics");
  info_cmd->add_option("mesh", info_path, "Mesh file")->required()->check(CLI::ExistingFile);
  info_cmd->add_option("--manifest", i_manifest, "Write a run manifest here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  if (threads == 0) {
    if (const char* env = std::getenv("MEASUREZIP_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        threads = 0;
      }
      if (threads < 1) {
        err << "error: MEASUREZIP_THREADS must be a positive integer\n";
        return 2;
      }
    }
  }
  if (threads > 0) omp_set_num_threads(threads);

  Context ctx{args, out, err};
  try {
    if (*compress_cmd) return cmd_compress(ctx, ca);
    if (*choose_cmd) return cmd_choose_m(ctx, ch);
    if (*curve_cmd) return cmd_error_curve(ctx, cu);
    if (*match_cmd) return cmd_match(ctx, ma);
    if (*haus_cmd) return cmd_hausdorff(ctx, ha, hb, h_manifest);
    if (*info_cmd) return cmd_info(ctx, info_path, i_manifest);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace measurezip
