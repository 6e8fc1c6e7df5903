#pragma once

#include <array>
#include <span>

#include "pte/trial_data.hpp"

namespace pte {

struct WeightSet;  // ipw.hpp

// One regression observation for the outcome model E[y | z, s].
struct RegObs {
  double y = 0.0;
  double s = 0.0;
  int z = 0;
};

// Interaction-model fit: y = b0 + b1*z + b2*s + b3*s*z + e, e ~ N(0, sigma^2).
struct LinearFit {
  std::array<double, 4> beta{};  // intercept, z, s, s*z
  double sigma = 0.0;
};

// Per-arm surrogate means.
struct ArmMeans {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
};

// Weighted least squares for the interaction model. Pass an empty weight
// span for unit weights; weights must be strictly positive. sigma uses the
// maximum-likelihood divisor sum(w). Throws SingularDesignError when the
// design is numerically rank-deficient (or has fewer rows than columns).
LinearFit fit_wls(std::span<const RegObs> obs, std::span<const double> weights = {});

// Treatment effect, residual effect, and explained proportion implied by the
// fitted outcome model and the arm surrogate means:
//   delta   = b1 + (b2 + b3) * alpha1 - b2 * alpha0
//   delta_s = b1 + b3 * alpha0
//   r_s     = 1 - delta_s / delta
// Throws UndefinedPteError when delta == 0.
EstimandSet pte_from_components(const LinearFit& fit, const ArmMeans& means);

// Full parametric pipeline: regress y on (z, s, s*z) over records with an
// observed surrogate, take (weighted) surrogate means per arm, and combine.
// With `ws` the regression and the means use inverse-probability weights;
// without it every observed record counts once, which is the complete-case
// analysis.
EstimandSet estimate_parametric(const TrialData& data, const WeightSet* ws = nullptr);

}  // namespace pte
