#pragma once

#include <vector>

#include "signmap/exec.hpp"
#include "signmap/types.hpp"

namespace signmap {

inline constexpr double kMinBaselineM = 1.0;
inline constexpr double kMaxConditionNumber = 1e8;

/// Latest detection's GPS and class.
SignPrediction condense_foi(const Tracklet& t);

/// Confidence-weighted mean GPS (uniform when all weights are zero) and the
/// modal class. Class ties go to the larger summed confidence, then to the
/// lower class id.
SignPrediction condense_weighted_average(const Tracklet& t);

/// Least-squares intersection of the lines from each camera toward
/// its predicted GPS, solved on the tangent plane at the first camera. Falls
/// back to the weighted average (method triangulate_fallback) when the
/// cameras span less than 1 m or the normal equations are ill-conditioned.
SignPrediction condense_triangulate(const Tracklet& t);

/// Dispatch by method tag. mrf is reserved and throws.
SignPrediction condense(const Tracklet& t, CondenseMethod method);

std::vector<SignPrediction> condense_all(const std::vector<Tracklet>& tracklets,
                                         CondenseMethod method, Exec exec = Exec::parallel);

}  // namespace signmap
