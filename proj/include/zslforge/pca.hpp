#pragma once

#include "zslforge/rng.hpp"

namespace zslforge {

/// Projection of rows onto the top-2 principal axes of their covariance.
/// Axis signs are fixed so the largest-magnitude loading is positive, which
/// makes the projection deterministic.
Matd pca_project_2d(const Matd& x);

}  // namespace zslforge
