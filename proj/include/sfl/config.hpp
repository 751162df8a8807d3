#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfl/dynamics.hpp"
#include "sfl/filters.hpp"
#include "sfl/kernels.hpp"
#include "sfl/sampling.hpp"
#include "sfl/vlmm.hpp"

namespace sfl {

inline constexpr int kSchemaVersion = 1;

enum class SweepKind { LteSweep, HSweep, EllSweep, CobsSweep, FilterComparison };
enum class LambdaMode { Fixed, Gp, Oracle };
enum class ErrorTarget { Flow, Field };

std::string to_string(SweepKind kind);
std::string to_string(LambdaMode mode);
std::string to_string(ErrorTarget target);

/// Lengthscale choice: median heuristic, one isotropic value, or one value per coordinate.
struct KernelChoice {
  enum class Kind { Median, Isotropic, PerCoordinate } kind = Kind::Median;
  double isotropic = 1.0;
  std::vector<double> per_coordinate;
  bool include_zeta = false;

  /// Concrete kernel for inputs stored one per row.
  KernelSpec resolve(const Matrix& inputs) const;
};

struct SweepSpec {
  SweepKind kind = SweepKind::LteSweep;
  std::vector<double> grid;
  LambdaMode lambda_mode = LambdaMode::Fixed;
  std::vector<double> lambda_grid;
  std::vector<std::string> filters;  // filter comparison families
  int n_probes = 50;
  int n_centers = 10;                // fixed-geometry observability sweeps
  int heldout = 2000;
  ErrorTarget target = ErrorTarget::Flow;
  double nominal_r = 1.0;            // bookkeeping only
};

/// One experiment, as read from a config file.
struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string name = "experiment";
  std::string system_name = "linear_2d";
  ParameterMap system_params;
  double tolerance = 1e-12;
  double max_substep = 0.05;
  DatasetSpec sampling;
  VlmmScheme scheme = VlmmScheme::make(Family::BDF, 2);
  KernelChoice kernel;
  SpectralFilterSpec filter;
  ErrorTarget learner_target = ErrorTarget::Field;
  int max_centers = 400;
  int test_grid = 30;    // points per axis of the field test grid
  int heldout = 2000;    // held-out flow samples for `fit`
  std::optional<SweepSpec> sweep;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = ".";

  VectorFieldSpec system() const;
  ReferenceFlow reference() const;
};

/// Strict parse of a JSON document; unknown keys and schema mismatches are ConfigErrors.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

}  // namespace sfl
