#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>

#include "pte/rng.hpp"
#include "pte/trial_data.hpp"

namespace pte {

struct Ci {
  double lo = 0.0, hi = 0.0;
};

// Spread summary of one estimand across bootstrap replicates.
struct ComponentSummary {
  double se = 0.0;
  Ci wald;      // point +- 1.96 * se
  Ci quantile;  // central 95% of replicate values
};

struct BootstrapResult {
  EstimandSet point;
  ComponentSummary delta, delta_s, r_s;
  int d_requested = 0;
  int d_effective = 0;                  // replicates that produced estimates
  std::map<std::string, int> failures;  // error kind -> count
};

using PteEstimator = std::function<EstimandSet(const TrialData&)>;

// Resample n0 records from arm 0 and n1 from arm 1, with replacement,
// preserving arm sizes. Output keeps all arm-0 draws first.
TrialData stratified_resample(const TrialData& data, RngStream& rng);

// Linear-interpolation quantile (R type 7). Values need not be sorted.
double quantile_type7(std::span<const double> values, double p);

// Refits the estimator on D stratified resamples. Replicate b draws from
// its own (seed, b) random stream, and results are reduced in replicate
// order, so the output does not depend on `threads`. Estimation errors are
// tallied by kind and the replicate skipped; if fewer than 90% of
// replicates succeed (or fewer than 2), throws InferenceUnreliableError.
// The estimator must succeed on the original data; pass `point_hint` to
// reuse an already-computed point estimate.
BootstrapResult bootstrap_inference(const TrialData& data, const PteEstimator& estimator,
                                    int d, std::uint64_t seed, int threads = 1,
                                    const EstimandSet* point_hint = nullptr);

}  // namespace pte
