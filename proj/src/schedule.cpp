#include "pairig/schedule.hpp"

#include <cmath>
#include <sstream>

#include "pairig/errors.hpp"

namespace pairig {
namespace {

void require(bool ok, const char* message) {
  if (!ok) throw ConfigurationError(message);
}

}  // namespace

void Schedule::validate() const {
  if (const auto* s = get_if<RateSchedule>()) {
    require(std::isfinite(s->gamma0) && s->gamma0 > 0.0, "rate schedule: gamma0 must be positive");
    require(std::isfinite(s->eta0) && s->eta0 > 0.0, "rate schedule: eta0 must be positive");
    require(s->b > 0.0 && s->b < 0.5, "rate schedule: b must lie in (0, 0.5)");
    return;
  }
  const auto& s = std::get<TikhonovSchedule>(variant_);
  require(std::isfinite(s.gamma) && s.gamma > 0.0, "tikhonov schedule: gamma must be positive");
  require(std::isfinite(s.eta) && s.eta > 0.0, "tikhonov schedule: eta must be positive");
  require(s.a > 0.0 && s.b > 0.0, "tikhonov schedule: a and b must be positive");
  require(s.a > s.b, "tikhonov schedule: requires a > b");
  require(s.a + s.b < 1.0, "tikhonov schedule: requires a + b < 1");
  require(3.0 * s.a + s.b < 2.0, "tikhonov schedule: requires 3a + b < 2");
  require(s.Gamma >= 1.0, "tikhonov schedule: requires Gamma >= 1");
}

StepPair schedule_values(const Schedule& schedule, std::size_t k) {
  const double kk = static_cast<double>(k);
  if (const auto* s = schedule.get_if<RateSchedule>()) {
    return {s->gamma0 / std::sqrt(kk + 1.0), s->eta0 / std::pow(kk + 1.0, s->b)};
  }
  const auto& s = *schedule.get_if<TikhonovSchedule>();
  return {s.gamma / std::pow(kk + s.Gamma, s.a), s.eta / std::pow(kk + s.Gamma, s.b)};
}

}  // namespace pairig
