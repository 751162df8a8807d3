#pragma once

#include <cstdint>
#include <string>

#include "sfl/learners.hpp"
#include "sfl/sampling.hpp"

namespace sfl {

/// Shortest round-trip text for a double.
std::string format_double(double value);

/// FNV-1a 64-bit hash, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// One row per window: trajectory, start, h, zeta_1.., observed states x{j}_{c}, clean states.
std::string dataset_csv(const Dataset& data);

/// Inverse of dataset_csv; trajectories are not restored.
Dataset parse_dataset_csv(const std::string& text);

struct DatasetManifest {
  std::string system;
  std::string scheme;
  std::uint64_t seed = 0;
  int dim = 0;
  int M = 1;
  std::size_t n_windows = 0;
  double noise_sigma = 0.0;
  std::string data_hash;
  double mean_h = 0.0;
  double moment_2p2 = 0.0;  // E[H^{2p+2}]
  std::string created_utc;
};

std::string manifest_json(const DatasetManifest& manifest, const std::string& config_json);

std::string model_json(const KernelExpansionModel& model);
KernelExpansionModel parse_model(const std::string& text);

/// Numeric CSV with one header line; returns the rows and the header names.
Matrix parse_points_csv(const std::string& text, std::vector<std::string>* header = nullptr);

/// Inputs followed by y_0.. columns.
std::string predictions_csv(const Matrix& inputs, const Matrix& outputs,
                            const std::vector<std::string>& input_names);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

/// Current UTC time as an ISO 8601 string.
std::string utc_timestamp();

}  // namespace sfl
