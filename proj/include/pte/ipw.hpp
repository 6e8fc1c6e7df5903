#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pte/trial_data.hpp"

namespace pte {

// Covariate set for the logistic observation model, written in the CLI as a
// comma-separated list of terms: "z", "y", "y,z", "y,z,y:z", "y,y:z".
struct WeightFormula {
  bool has_y = false;
  bool has_z = false;
  bool has_yz = false;

  static WeightFormula parse(const std::string& text);
  std::string str() const;  // canonical term order: y, z, y:z
  int dim() const { return 1 + has_y + has_z + has_yz; }
};

enum class MissModelKind { EmpiricalByArm, Logistic };

// Fitted model for P(surrogate observed | y, z).
struct MissingnessModel {
  MissModelKind kind = MissModelKind::Logistic;
  WeightFormula formula;              // logistic only
  std::vector<double> coef;           // intercept, then y, z, y:z as present
  std::array<double, 2> arm_prob{};   // empirical only: P(observed | z)
  bool converged = true;
  bool separation = false;

  double prob(const PatientRecord& rec) const;
};

// Observed fraction within each arm; the saturated arm-only model.
MissingnessModel fit_missingness_empirical(const TrialData& data);

// Logistic regression of the observation indicator on the formula terms,
// fitted by Newton iterations with step halving. Flags (rather than fails
// on) complete separation; throws SingularDesignError for rank-deficient
// designs.
MissingnessModel fit_missingness_logistic(const TrialData& data,
                                          const WeightFormula& formula);

// Per-record inverse-probability weights aligned with data.records:
// observed records get 1/prob (optionally truncated at `cap`), records with
// a missing surrogate get weight 0.
struct WeightSet {
  std::vector<double> prob;
  std::vector<double> weight;
  std::optional<double> cap;
};

WeightSet weights_from_model(const MissingnessModel& model, const TrialData& data,
                             std::optional<double> cap = std::nullopt);

}  // namespace pte
