#include "sfl/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sfl/errors.hpp"
#include "sfl/parallel.hpp"
#include "sfl/rng.hpp"

namespace sfl {

namespace {

constexpr std::uint64_t kStepSalt = 0x5157;
constexpr std::uint64_t kStateSalt = 0x57a7e;
constexpr int kMaxTrajectoryRounds = 20;

Vector uniform_in_box(const Box& box, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector x(box.dim());
  for (Eigen::Index i = 0; i < box.dim(); ++i) {
    x[i] = box.lower[i] + unit(rng) * (box.upper[i] - box.lower[i]);
  }
  return x;
}

struct TrajectoryResult {
  TrajectoryRecord record;
  std::vector<WindowSample> windows;
};

}  // namespace

void StepLawSpec::validate() const {
  if (!(h_min > 0.0) || !(h_max > 0.0) || !std::isfinite(h_min) || !std::isfinite(h_max)) {
    throw ConfigError("step law: h_min and h_max must be positive");
  }
  if (h_min > h_max) throw ConfigError("step law: h_min > h_max");
  if (!(ratio_lower > 0.0) || ratio_lower > ratio_upper) {
    throw ConfigError("step law: ratio_bounds must satisfy 0 < lower <= upper");
  }
  switch (kind) {
    case StepLawKind::UniformDeterministic:
    case StepLawKind::LogUniform:
      if (ratio_lower > 1.0 || ratio_upper < 1.0) {
        throw ConfigError("step law: ratio_bounds must contain 1");
      }
      break;
    case StepLawKind::GeometricRamp:
      if (!(ramp_ratio > 0.0) || ramp_ratio < ratio_lower || ramp_ratio > ratio_upper) {
        throw ConfigError("step law: ramp_ratio outside ratio_bounds");
      }
      break;
  }
}

std::vector<double> generate_steps(const StepLawSpec& law, std::size_t count, std::uint64_t seed) {
  law.validate();
  if (count == 0) throw ValidationError("generate_steps: count must be >= 1");
  std::vector<double> steps(count);
  switch (law.kind) {
    case StepLawKind::UniformDeterministic:
      std::fill(steps.begin(), steps.end(), law.h_max);
      break;
    case StepLawKind::LogUniform: {
      Rng rng(mix64(seed));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      auto draw = [&](double lo, double hi) {
        return std::exp(std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo)));
      };
      steps[0] = draw(law.h_min, law.h_max);
      for (std::size_t k = 1; k < count; ++k) {
        const double lo = std::max(law.h_min, steps[k - 1] * law.ratio_lower);
        const double hi = std::min(law.h_max, steps[k - 1] * law.ratio_upper);
        steps[k] = std::clamp(draw(lo, hi), lo, hi);
      }
      break;
    }
    case StepLawKind::GeometricRamp: {
      const double r = law.ramp_ratio;
      if (r == 1.0) {
        std::fill(steps.begin(), steps.end(), law.h_min);
        break;
      }
      const bool growing = r > 1.0;
      double ratio = r;
      steps[0] = growing ? law.h_min : law.h_max;
      for (std::size_t k = 1; k < count; ++k) {
        double next = steps[k - 1] * ratio;
        if (next > law.h_max * (1 + 1e-12) || next < law.h_min * (1 - 1e-12)) {
          ratio = 1.0 / ratio;
          if (ratio < law.ratio_lower || ratio > law.ratio_upper) {
            throw ConfigError("step law: geometric ramp must reverse but 1/ramp_ratio is outside ratio_bounds");
          }
          next = steps[k - 1] * ratio;
          if (next > law.h_max * (1 + 1e-12) || next < law.h_min * (1 - 1e-12)) {
            throw ConfigError("step law: [h_min, h_max] is too narrow for ramp_ratio");
          }
        }
        steps[k] = next;
      }
      break;
    }
  }
  return steps;
}

double step_moment(std::span<const double> steps, double q) {
  if (steps.empty()) throw ValidationError("step_moment of an empty sequence");
  double sum = 0.0;
  for (double h : steps) sum += std::pow(h, q);
  return sum / static_cast<double>(steps.size());
}

std::vector<double> step_ratios(std::span<const double> steps) {
  std::vector<double> zeta;
  for (std::size_t i = 1; i < steps.size(); ++i) zeta.push_back(steps[i] / steps[i - 1]);
  return zeta;
}

std::vector<double> Dataset::anchor_steps() const {
  std::vector<double> h;
  h.reserve(windows.size());
  for (const auto& w : windows) h.push_back(w.h);
  return h;
}

double Dataset::moment(double q) const {
  const auto h = anchor_steps();
  return step_moment(h, q);
}

Dataset generate_dataset(const ReferenceFlow& ref, const DatasetSpec& spec, std::uint64_t seed,
                         unsigned jobs) {
  const int m = spec.M;
  if (m < 1) throw ValidationError("generate_dataset: M must be >= 1");
  if (spec.n_windows < 1) throw ValidationError("generate_dataset: n_windows must be >= 1");
  if (!(spec.noise_sigma >= 0.0)) throw ValidationError("generate_dataset: noise_sigma must be >= 0");
  spec.steps.validate();
  const DesignLawSpec& design = spec.design;
  if (design.n_trajectories < 1) throw ConfigError("design law: n_trajectories must be >= 1");
  if (design.box.dim() != ref.system.dim) throw ConfigError("design law: box dimension mismatch");
  if (!(design.horizon >= 0.0)) throw ConfigError("design law: horizon must be >= 0");

  int n_states = 0;
  if (design.states_per_trajectory > 0) {
    n_states = design.states_per_trajectory;
    if (n_states < m + 1) {
      throw GenerationError("insufficient window length: trajectories of " + std::to_string(n_states) +
                            " states cannot hold a window of M + 1 = " + std::to_string(m + 1));
    }
  } else {
    const int per = (spec.n_windows + design.n_trajectories - 1) / design.n_trajectories;
    n_states = per + m;
  }

  const Box safety = ref.system.domain_box.scaled(2.0);
  auto simulate = [&](int id) {
    TrajectoryResult out;
    TrajectoryRecord& rec = out.record;
    rec.id = id;
    rec.seed = child_seed(seed, static_cast<std::uint64_t>(id));
    rec.noise_sigma = spec.noise_sigma;
    Rng rng(child_seed(rec.seed, 0, kStateSalt));
    const std::vector<double> steps =
        generate_steps(spec.steps, static_cast<std::size_t>(n_states - 1), child_seed(rec.seed, 0, kStepSalt));

    Vector x = uniform_in_box(design.box, rng);
    double t = 0.0;
    if (design.kind == DesignLawKind::TrajectoryTimeAverage && design.horizon > 0.0) {
      x = flow(ref, x, design.horizon, 0.0);
      t = design.horizon;
    }
    rec.times.push_back(t);
    rec.shadow.push_back(x);
    for (double h : steps) {
      x = flow(ref, x, h, t);
      t += h;
      if (!safety.contains(x)) {
        throw GenerationError("trajectory " + std::to_string(id) + " left the safety box at t=" +
                              std::to_string(t));
      }
      rec.times.push_back(t);
      rec.shadow.push_back(x);
    }
    std::normal_distribution<double> noise(0.0, 1.0);
    rec.states = rec.shadow;
    if (spec.noise_sigma > 0.0) {
      for (auto& s : rec.states) {
        for (Eigen::Index c = 0; c < s.size(); ++c) s[c] += spec.noise_sigma * noise(rng);
      }
    }

    for (int start = 0; start + m < n_states; ++start) {
      if (!design.box.contains(rec.shadow[start + m])) continue;
      WindowSample w;
      w.trajectory = id;
      w.start = start;
      w.h = steps[start + m - 1];
      w.zeta = step_ratios(std::span<const double>(steps).subspan(start, m));
      w.window_states.assign(rec.states.begin() + start, rec.states.begin() + start + m + 1);
      w.clean_states.assign(rec.shadow.begin() + start, rec.shadow.begin() + start + m + 1);
      w.anchor_x = w.window_states.back();
      out.windows.push_back(std::move(w));
    }
    return out;
  };

  Dataset data;
  data.dim = ref.system.dim;
  data.M = m;
  data.noise_sigma = spec.noise_sigma;
  data.seed = seed;

  int next_id = 0;
  for (int round = 0; round < kMaxTrajectoryRounds; ++round) {
    const int batch = design.n_trajectories;
    std::vector<TrajectoryResult> results(static_cast<std::size_t>(batch));
    parallel_for(results.size(), jobs, [&](std::size_t i) {
      results[i] = simulate(next_id + static_cast<int>(i));
    });
    next_id += batch;
    for (auto& r : results) {
      bool used = false;
      for (auto& w : r.windows) {
        if (static_cast<int>(data.windows.size()) >= spec.n_windows) break;
        data.windows.push_back(std::move(w));
        used = true;
      }
      if (used) data.trajectories.push_back(std::move(r.record));
    }
    if (static_cast<int>(data.windows.size()) >= spec.n_windows) return data;
  }
  throw GenerationError("could not collect " + std::to_string(spec.n_windows) +
                        " windows inside the design box");
}

}  // namespace sfl
