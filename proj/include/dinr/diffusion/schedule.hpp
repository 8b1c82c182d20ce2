#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dinr::diffusion {

enum class ScheduleKind { LinearBeta = 0, Cosine = 1, Strided = 2 };

std::string to_string(ScheduleKind k);
ScheduleKind schedule_kind_from_string(const std::string& s);

// Cumulative signal levels alpha_bar_1 .. alpha_bar_T, strictly decreasing
// in (0, 1]. alpha_bar(0) is defined as 1 so the final reverse step is the
// identity.
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::LinearBeta;
  std::vector<double> alphas;  // alpha_bar_t at index t-1
  std::vector<double> betas;   // 1 - alpha_bar_t / alpha_bar_{t-1}
  // Training-time index fed to the timestep embedding for each step t.
  std::vector<double> train_steps;

  std::size_t T() const { return alphas.size(); }
  // t in [0, T]; throws std::out_of_range otherwise.
  double alpha_bar(std::size_t t) const;
  double train_step(std::size_t t) const { return train_steps.at(t - 1); }
  void validate() const;

  friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;
};

// linear-beta: beta linear from 1e-4 to 0.02 rescaled by 1000/T (clipped
// at 0.999); cosine: alpha_bar(t) = f(t)/f(0), f = cos^2((t/T + s)/(1+s) pi/2)
// with s = 0.008. Throws std::invalid_argument when T < 2.
NoiseSchedule make_schedule(std::size_t T, ScheduleKind kind);

// `steps` evenly spaced training steps round(i * T_train / steps),
// i = 1..steps, e.g. 1000 -> 25 keeps every 40th step.
NoiseSchedule stride_schedule(const NoiseSchedule& train, std::size_t steps);

// u32 T, u8 kind, f64 alpha_bar[T], f64 train_steps[T], little endian.
void write_schedule(std::ostream& out, const NoiseSchedule& s);
NoiseSchedule read_schedule(std::istream& in);

}  // namespace dinr::diffusion
