#pragma once

#include <optional>
#include <span>

#include "pte/trial_data.hpp"

namespace pte {

struct WeightSet;  // ipw.hpp

enum class KernelKind { Epanechnikov, Triweight };

struct KernelSpec {
  KernelKind kind = KernelKind::Epanechnikov;
  double bandwidth = 0.0;
};

// K(u): Epanechnikov 0.75*(1-u^2), triweight (35/32)*(1-u^2)^3; both zero
// outside |u| <= 1.
double kernel_weight(KernelKind kind, double u);

// Rule-of-thumb bandwidth with extra undersmoothing:
//   0.9 * min(sd, IQR/1.34) * m^(-3/10).
// Falls back to sd when the IQR is zero; throws ZeroSpreadError when every
// value is identical (and ValidationError for m < 2).
double select_bandwidth(std::span<const double> s);

struct NwValue {
  double value = 0.0;
  bool extrapolated = false;  // no kernel mass at s0; nearest neighbor used
};

// Locally weighted mean of y1 at s0: sum_j K((s1j-s0)/h) w1j y1j over the
// matching sum of weights. Pass an empty w1 for unit weights. When the
// denominator is zero the nearest neighbor's y is returned instead (ties
// averaged) and the value is marked extrapolated.
NwValue nw_conditional_mean(double s0, std::span<const double> s1,
                            std::span<const double> y1,
                            std::span<const double> w1, const KernelSpec& kernel);

// Range check of arm-0 observed surrogates against the arm-1 observed range.
struct OverlapReport {
  double lo0 = 0.0, hi0 = 0.0;  // arm-0 observed surrogate range
  double lo1 = 0.0, hi1 = 0.0;  // arm-1 observed surrogate range
  int n_outside = 0;            // arm-0 values outside [lo1, hi1]
  bool contained = false;
};

OverlapReport check_overlap(const TrialData& data);

struct NonparEstimate {
  EstimandSet estimands;
  KernelSpec kernel;
  OverlapReport overlap;
  int extrapolations = 0;  // arm-0 points evaluated by nearest neighbor
};

// Kernel-regression pipeline: the treated-arm conditional mean of y given s
// is smoothed at every observed control-arm surrogate value and averaged.
// The per-arm outcome means always use every record unweighted — y is never
// missing, so the overall effect needs no correction. Weights (when given)
// enter only the smoother and the control-arm average of smoothed values;
// records with zero weight drop out of both. The bandwidth is selected from
// the treated arm's observed surrogates unless `kernel` pins a positive one
// (a nonpositive bandwidth keeps the kind and auto-selects).
NonparEstimate estimate_nonparametric(const TrialData& data,
                                      const WeightSet* ws = nullptr,
                                      const std::optional<KernelSpec>& kernel = std::nullopt);

}  // namespace pte
