#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sfl/dynamics.hpp"

namespace sfl {

enum class StepLawKind { UniformDeterministic, LogUniform, GeometricRamp };

/// How far each observation advances in time.
///
/// uniform_deterministic uses h_max for every step. log_uniform draws each step log-uniformly on
/// the part of [h_min, h_max] reachable from the previous step within the ratio bounds.
/// geometric_ramp starts at h_min (h_max when ramp_ratio < 1), multiplies by ramp_ratio and
/// reverses direction at the ends of [h_min, h_max].
struct StepLawSpec {
  StepLawKind kind = StepLawKind::UniformDeterministic;
  double h_min = 0.1;
  double h_max = 0.1;
  double ratio_lower = 0.5;
  double ratio_upper = 2.0;
  double ramp_ratio = 1.05;

  void validate() const;
};

std::vector<double> generate_steps(const StepLawSpec& law, std::size_t count, std::uint64_t seed);

/// Empirical moment mean(h^q).
double step_moment(std::span<const double> steps, double q);

enum class DesignLawKind { IidUniformBox, TrajectoryTimeAverage };

/// Where the experiment spends time.
///
/// iid_uniform_box starts every trajectory at a fresh uniform point of `box`.
/// trajectory_time_average does the same but discards a burn-in of length `horizon` first, so
/// samples follow the time-average law of the flow. Windows whose anchor leaves `box` are
/// dropped. `states_per_trajectory` = 0 picks the length from n_windows / n_trajectories.
struct DesignLawSpec {
  DesignLawKind kind = DesignLawKind::IidUniformBox;
  Box box;
  int n_trajectories = 1;
  double horizon = 0.0;
  int states_per_trajectory = 0;
};

struct TrajectoryRecord {
  int id = 0;
  std::vector<double> times;
  std::vector<Vector> states;  // observed (noisy)
  std::vector<Vector> shadow;  // noiseless
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// One training atom: M + 1 consecutive states of a trajectory.
struct WindowSample {
  int trajectory = 0;
  int start = 0;                      // index of the oldest state in the trajectory
  Vector anchor_x;                    // newest observed state
  double h = 0.0;                     // anchor step, ending at the anchor
  std::vector<double> zeta;           // M - 1 step ratios inside the window
  std::vector<Vector> window_states;  // observed, oldest first
  std::vector<Vector> clean_states;   // noiseless shadow of window_states
  Vector label;                       // empty until a label map is applied
  double weight = 1.0;
};

struct DatasetSpec {
  DesignLawSpec design;
  StepLawSpec steps;
  int M = 1;
  int n_windows = 1;
  double noise_sigma = 0.0;
};

struct Dataset {
  int dim = 0;
  int M = 1;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::vector<WindowSample> windows;
  std::vector<TrajectoryRecord> trajectories;

  std::vector<double> anchor_steps() const;
  /// mean(H^q) over the anchor steps of all windows.
  double moment(double q) const;
};

/// Ratio vector of M - 1 entries for a run of M consecutive steps.
std::vector<double> step_ratios(std::span<const double> steps);

/// Samples trajectories with the reference flow and cuts them into stride-1 windows.
///
/// Trajectories use child seeds of `seed`, so the result does not depend on `jobs`.
Dataset generate_dataset(const ReferenceFlow& ref, const DatasetSpec& spec, std::uint64_t seed,
                         unsigned jobs = 1);

}  // namespace sfl
