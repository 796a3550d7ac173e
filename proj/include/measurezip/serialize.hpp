#pragma once

#include "measurezip/compress.hpp"
#include "measurezip/kernels.hpp"
#include "measurezip/measures.hpp"
#include "measurezip/nystrom.hpp"
#include "measurezip/registration.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>

namespace measurezip {

using Json = nlohmann::ordered_json;

// {"space": "oriented(3)", "points": [[...]], "weights": [[...]]}
Json measure_to_json(const DiracMeasure& mu);
DiracMeasure measure_from_json(const Json& j);

// One atom per row: x0..x{p-1},w0..w{w-1}, with a header line.
void write_measure_csv(std::ostream& out, const DiracMeasure& mu);

Json controls_to_json(const ControlSet& c);
ControlSet controls_from_json(const Json& j);

// Accepted forms:
//   {"gaussian": 0.3}, {"spherical_gaussian": 0.5}, "linear_spherical",
//   {"sum_of_gaussians": [0.1, 0.2]},
//   {"product": {"spatial": <kernel>, "spherical": <kernel>}}
// An object may also wrap the kernel as {"kernel": <kernel>}.
KernelSpec kernel_from_json(const Json& j);
Json kernel_to_json(const KernelSpec& k);

// {"kernel": <kernel>, "n_steps": 10, "lambda": 100, "max_iters": 500,
//  "step_rule": "backtracking" | {"fixed": 0.001}, "rel_tol": 1e-6}
// A bare kernel is accepted too; missing fields keep their defaults.
DeformationConfig deformation_from_json(const Json& j);
Json deformation_to_json(const DeformationConfig& cfg);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

// Shortest decimal string that round-trips the double.
std::string format_double(double v);

}  // namespace measurezip
