#include "signmap/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace signmap::losses {

namespace {

void require_probability(double p_t) {
  if (!(p_t > 0.0 && p_t <= 1.0)) {
    throw std::domain_error("p_t = " + std::to_string(p_t) + " outside (0, 1]");
  }
}

}  // namespace

double clamp_probability(double p) { return std::clamp(p, kProbabilityFloor, 1.0); }

double cross_entropy(double p_t) {
  require_probability(p_t);
  return -std::log(p_t);
}

double focal_loss(double p_t, double gamma) {
  require_probability(p_t);
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw std::domain_error("gamma must be finite and nonnegative");
  }
  if (p_t == 1.0) return 0.0;
  return -std::pow(1.0 - p_t, gamma) * std::log(p_t);
}

double adaptive_gamma(double p_t) {
  require_probability(p_t);
  return std::exp(1.0 - p_t);
}

double focal_loss_e(double p_t) {
  require_probability(p_t);
  if (p_t == 1.0) return 0.0;
  return -std::pow(1.0 - p_t, adaptive_gamma(p_t)) * std::log(p_t);
}

double d_focal_loss_e(double p_t) {
  if (!(p_t > 0.0 && p_t < 1.0)) {
    throw std::domain_error("derivative needs p_t in (0, 1), got " + std::to_string(p_t));
  }
  // m(p) = (1-p)^G(p), G = e^{1-p}; ln m = G ln(1-p)
  // m'/m = -G ln(1-p) - G/(1-p)
  const double q = 1.0 - p_t;
  const double g = std::exp(q);
  const double m = std::pow(q, g);
  const double dm = m * (-g * std::log(q) - g / q);
  const double log_p = std::log(p_t);
  return -(dm * log_p + m / p_t);
}

}  // namespace signmap::losses
