#pragma once

#include <functional>
#include <vector>

#include "pte/parametric.hpp"
#include "pte/trial_data.hpp"

namespace pte {

// Sorted distinct observed surrogate values per arm; the discrete support
// each arm's surrogate distribution lives on.
struct SupportSet {
  std::vector<double> s0, s1;

  const std::vector<double>& arm(int z) const { return z == 0 ? s0 : s1; }
};

// Throws ValidationError unless each arm has at least 2 distinct observed
// surrogate values.
SupportSet build_support(const TrialData& data);

// Joint parameter state: the normal outcome model plus one probability mass
// vector per arm, aligned with the SupportSet.
struct SmleFit {
  std::array<double, 4> beta{};  // intercept, z, s, s*z
  double sigma = 0.1;
  std::vector<double> p0, p1;
  int iterations = 0;
  bool converged = false;
  bool sigma_floored = false;

  const std::vector<double>& mass(int z) const { return z == 0 ? p0 : p1; }
};

// Posterior mass over the arm's support for each record: a one-hot row for
// records with an observed surrogate, the normalized likelihood-times-prior
// row for missing ones.
struct PhiMatrix {
  std::vector<std::vector<double>> rows;
};

PhiMatrix e_step(const SmleFit& params, const TrialData& data,
                 const SupportSet& support);

struct MStepResult {
  LinearFit fit;
  std::vector<double> p0, p1;
};

// Maximizes the expected complete-data log likelihood under phi: a weighted
// regression over the support-expanded rows plus the closed-form mass
// update.
MStepResult m_step(const PhiMatrix& phi, const TrialData& data,
                   const SupportSet& support);

struct EmOptions {
  double tol = 1e-3;   // max absolute parameter change across beta, sigma, masses
  int max_iter = 500;
  // Called with the state after every iteration (diagnostics, tests).
  std::function<void(const SmleFit&)> observer;
};

// Alternates expectation and maximization from the fixed starting point
// (beta = 0, sigma = 0.1, uniform masses) until no parameter moves by tol.
// Returns with converged == false when max_iter runs out; sigma is floored
// at 1e-6 (and flagged) rather than collapsing to zero.
SmleFit em_fit(const TrialData& data, const EmOptions& opts = {});

// Log likelihood of the observed data under the fitted state; increases
// across EM iterations.
double observed_data_loglik(const SmleFit& fit, const TrialData& data,
                            const SupportSet& support);

// Surrogate means implied by the fitted masses.
ArmMeans support_means(const SmleFit& fit, const SupportSet& support);

struct SmleEstimate {
  EstimandSet estimands;
  SmleFit fit;
  SupportSet support;
};

// Full pipeline: fit by EM, read off the effect decomposition.
SmleEstimate estimate_smle(const TrialData& data, const EmOptions& opts = {});

}  // namespace pte
