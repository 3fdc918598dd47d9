#pragma once

// Scalar classification losses as functions of p_t, the probability assigned
// to the true class: cross entropy, focal loss and the adaptive-exponent
// focal loss (FLe) whose modulator is exp(1 - p_t).

namespace signmap::losses {

inline constexpr double kProbabilityFloor = 1e-12;

/// Clamps p into [kProbabilityFloor, 1] for use inside training loops.
double clamp_probability(double p);

double cross_entropy(double p_t);
double focal_loss(double p_t, double gamma);
/// Adaptive exponent exp(1 - p_t).
double adaptive_gamma(double p_t);
double focal_loss_e(double p_t);

/// d/dp of focal_loss_e on the open interval (0, 1).
double d_focal_loss_e(double p_t);

}  // namespace signmap::losses
