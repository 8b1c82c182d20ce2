#include "dinr/diffusion/schedule.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "dinr/binary_io.hpp"
#include "dinr/errors.hpp"

namespace dinr::diffusion {

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::LinearBeta: return "linear-beta";
    case ScheduleKind::Cosine: return "cosine";
    case ScheduleKind::Strided: return "strided";
  }
  return "?";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "linear-beta" || s == "linear") return ScheduleKind::LinearBeta;
  if (s == "cosine") return ScheduleKind::Cosine;
  throw ConfigError(fmt::format("unknown schedule kind '{}'", s));
}

double NoiseSchedule::alpha_bar(std::size_t t) const {
  if (t == 0) return 1.0;
  if (t > alphas.size()) throw std::out_of_range(fmt::format("timestep {} outside [0, {}]", t, alphas.size()));
  return alphas[t - 1];
}

void NoiseSchedule::validate() const {
  if (alphas.empty()) throw ConfigError("noise schedule is empty");
  if (train_steps.size() != alphas.size() || betas.size() != alphas.size()) {
    throw ConfigError("noise schedule arrays have inconsistent lengths");
  }
  double prev = 1.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double a = alphas[i];
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError(fmt::format("alpha_bar_{} = {} outside (0, 1]", i + 1, a));
    if (i > 0 && !(a < prev)) throw ConfigError(fmt::format("alpha_bar not strictly decreasing at t = {}", i + 1));
    prev = a;
  }
}

namespace {
void derive_betas(NoiseSchedule& s) {
  s.betas.resize(s.alphas.size());
  double prev = 1.0;
  for (std::size_t i = 0; i < s.alphas.size(); ++i) {
    s.betas[i] = 1.0 - s.alphas[i] / prev;
    prev = s.alphas[i];
  }
}
}  // namespace

NoiseSchedule make_schedule(std::size_t T, ScheduleKind kind) {
  if (T < 2) throw std::invalid_argument(fmt::format("schedule needs T >= 2, got {}", T));
  NoiseSchedule s;
  s.kind = kind;
  s.alphas.resize(T);
  s.train_steps.resize(T);
  const auto Td = static_cast<double>(T);
  if (kind == ScheduleKind::LinearBeta) {
    const double scale = 1000.0 / Td;
    const double lo = 1e-4 * scale;
    const double hi = 0.02 * scale;
    double prod = 1.0;
    for (std::size_t i = 0; i < T; ++i) {
      const double beta = std::min(lo + (hi - lo) * static_cast<double>(i) / (Td - 1.0), 0.999);
      prod *= 1.0 - beta;
      s.alphas[i] = prod;
    }
  } else if (kind == ScheduleKind::Cosine) {
    constexpr double off = 0.008;
    auto f = [&](double t) {
      const double c = std::cos((t / Td + off) / (1.0 + off) * std::numbers::pi / 2.0);
      return c * c;
    };
    const double f0 = f(0.0);
    double prev = 1.0;
    for (std::size_t i = 0; i < T; ++i) {
      double a = f(static_cast<double>(i + 1)) / f0;
      // Clip betas at 0.999 like the reference schedule.
      a = std::max(a, prev * (1.0 - 0.999));
      s.alphas[i] = a;
      prev = a;
    }
  } else {
    throw std::invalid_argument("make_schedule: use stride_schedule for strided schedules");
  }
  for (std::size_t i = 0; i < T; ++i) s.train_steps[i] = static_cast<double>(i + 1);
  derive_betas(s);
  s.validate();
  return s;
}

NoiseSchedule stride_schedule(const NoiseSchedule& train, std::size_t steps) {
  if (steps < 1 || steps > train.T()) {
    throw std::invalid_argument(fmt::format("cannot stride a {}-step schedule down to {}", train.T(), steps));
  }
  NoiseSchedule s;
  s.kind = ScheduleKind::Strided;
  const auto Tt = static_cast<double>(train.T());
  for (std::size_t i = 1; i <= steps; ++i) {
    auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(i) * Tt / static_cast<double>(steps)));
    idx = std::clamp<std::size_t>(idx, 1, train.T());
    s.alphas.push_back(train.alpha_bar(idx));
    s.train_steps.push_back(train.train_step(idx));
  }
  derive_betas(s);
  s.validate();
  return s;
}

void write_schedule(std::ostream& out, const NoiseSchedule& s) {
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.T()));
  binio::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(s.kind));
  for (double a : s.alphas) binio::write_le<double>(out, a);
  for (double t : s.train_steps) binio::write_le<double>(out, t);
}

NoiseSchedule read_schedule(std::istream& in) {
  NoiseSchedule s;
  const auto T = binio::read_le<std::uint32_t>(in);
  const auto kind = binio::read_le<std::uint8_t>(in);
  if (kind > 2) throw FormatError(fmt::format("unknown schedule kind {}", kind));
  s.kind = static_cast<ScheduleKind>(kind);
  s.alphas.resize(T);
  s.train_steps.resize(T);
  for (double& a : s.alphas) a = binio::read_le<double>(in);
  for (double& t : s.train_steps) t = binio::read_le<double>(in);
  derive_betas(s);
  s.validate();
  return s;
}

}  // namespace dinr::diffusion
