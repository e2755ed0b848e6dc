#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kfp/filter_model.hpp"
#include "kfp/geometry.hpp"
#include "kfp/risk_lab.hpp"

namespace kfp::io {

/// Model spec: JSON object with keys p, q, d, poles, roots, gain.
///   poles/roots: lists of [re, im] pairs (plain numbers allowed for reals)
///   d:           number or [re, im]; absent means no fractional coordinate
///   p/q:         optional, must match the list lengths when present
///   gain:        optional, default 1
/// Unknown keys are rejected with ParseError.
FilterModel parse_model_spec(const std::string& text);
std::string write_model_spec(const FilterModel& model);

/// Experiment config: JSON object with keys family ("AR1" | "AR2"),
/// true_params, sample_sizes, replications, grid, prior_ids, seed,
/// boundary_margin, kl_tolerance, kappa2_ratio. Missing keys keep defaults.
ExperimentConfig parse_experiment_config(const std::string& text);
std::string write_experiment_config(const ExperimentConfig& config);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary file in the same directory and renames it
/// into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// "# key = value" lines.
std::string header_comment(const KeyValues& entries);
/// "key = value" lines.
std::string key_value_document(const KeyValues& entries);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double value);
/// 17 significant digits.
std::string format_fixed17(double value);

/// Row-major `i,j,re,im` CSV of a matrix with a header line.
std::string tensor_csv(const CMatrix& m);
/// `i,j,k,re,im` CSV of the connection.
std::string connection_csv(const ConnectionTensor& gamma);

}  // namespace kfp::io
