#pragma once

#include <cstddef>
#include <variant>

namespace pairig {

/// gamma_k = gamma0 / sqrt(k+1), eta_k = eta0 / (k+1)^b with b in (0, 0.5).
struct RateSchedule {
  double gamma0;
  double eta0;
  double b;
};

/// gamma_k = gamma / (k+Gamma)^a, eta_k = eta / (k+Gamma)^b.
struct TikhonovSchedule {
  double gamma;
  double eta;
  double a;
  double b;
  double Gamma;
};

struct StepPair {
  double gamma;
  double eta;
};

class Schedule {
 public:
  using Variant = std::variant<RateSchedule, TikhonovSchedule>;

  Schedule(RateSchedule s) : variant_(s) {}
  Schedule(TikhonovSchedule s) : variant_(s) {}

  const Variant& variant() const { return variant_; }
  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&variant_);
  }

  /// Throws ConfigurationError when the parameters break the structural
  /// requirements of the family (positivity, b in (0, 0.5) for the rate
  /// family; a > b, a+b < 1, 3a+b < 2, Gamma >= 1 for the Tikhonov family).
  /// The two Gamma-vs-modulus conditions depend on mu_min and are checked by
  /// check_schedule_conditions instead.
  void validate() const;

 private:
  Variant variant_;
};

StepPair schedule_values(const Schedule& schedule, std::size_t k);

}  // namespace pairig
