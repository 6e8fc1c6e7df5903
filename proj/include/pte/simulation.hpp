#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pte/ipw.hpp"
#include "pte/trial_data.hpp"

namespace pte {

// P(surrogate observed | y, z): either a flat rate or logistic in y, z, yz.
struct MissingnessLaw {
  bool constant = false;
  double rate = 0.65;                              // constant only
  double b0 = 0.0, by = 0.0, bz = 0.0, byz = 0.0;  // logit scale otherwise

  double prob(double y, int z) const;
};

// One benchmark scenario: per-arm normal surrogate laws, a shared linear
// outcome model with treatment interaction, and an observation mechanism.
struct SettingSpec {
  int id = 1;
  int n = 2000;
  std::array<double, 2> s_mean{5.0, 6.0};  // by arm
  std::array<double, 2> s_var{1.0, 4.0};
  std::array<double, 4> beta{2.0, 1.0, 5.0, 1.0};  // 1, z, s, s*z
  double noise_sd = 1.0;
  MissingnessLaw law;

  // The five stock scenarios. 1: constant 0.65. 2: logit(0.4 + 0.2z).
  // 3: logit(0.015y). 4: logit(0.015y + 0.015yz). 5: like 3 but the arm-1
  // surrogate variance shrinks to 1/4, leaving the arms nearly disjoint.
  static SettingSpec standard(int id);

  // Effect decomposition implied by beta and the surrogate means.
  EstimandSet truth() const;
};

struct GeneratedTrial {
  TrialData full;    // surrogate observed everywhere
  TrialData masked;  // same records, surrogate hidden where O = 0
  EstimandSet truth;
};

// Draws one replicate: n/2 records per arm (arm 0 first), surrogates and
// noise from replicate-keyed streams, then the observation indicators from
// a third stream so masking never perturbs the generated values.
GeneratedTrial generate_trial(const SettingSpec& spec, std::uint64_t seed,
                              std::uint64_t replicate);

// The estimators the bench can run, in reporting order.
enum class Method {
  GoldNonpar,
  CcNonpar,
  IpwNonpar,
  GoldPar,
  CcPar,
  IpwPar,
  Smle,
};

inline constexpr std::array<Method, 7> kAllMethods = {
    Method::GoldNonpar, Method::CcNonpar, Method::IpwNonpar, Method::GoldPar,
    Method::CcPar,      Method::IpwPar,   Method::Smle,
};

std::string method_label(Method m);
std::optional<Method> parse_method(const std::string& label);

// Observation-model covariates used for a setting's IPW rows when the user
// does not supply a formula: the same terms that drive the generating law
// (the flat mechanism gets the arm-rate model "z").
WeightFormula default_ipw_formula(const SettingSpec& spec);

struct StudyConfig {
  int reps = 200;
  int boot_d = 500;  // 0 skips bootstrap (points only; ase/cp left NaN)
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<WeightFormula> ipw_formula;  // overrides the default
  std::optional<double> weight_cap;
};

// Monte Carlo summary of one method's proportion-explained estimates.
struct MetricsRow {
  std::string method;
  int reps = 0;            // attempted replicates
  int used = 0;            // replicates with a point estimate
  double bias = 0.0;       // mean estimate - truth
  double pct_bias = 0.0;   // 100 * bias / truth
  double ese = 0.0;        // sd of estimates across replicates
  double ase = 0.0;        // mean bootstrap se
  double cp_n = 0.0;       // coverage of the normal-approximation interval
  double cp_q = 0.0;       // coverage of the quantile interval
  double re = 0.0;         // var(gold) / var(method), same estimator family
  int est_failures = 0;
  int boot_failures = 0;   // replicates whose bootstrap was unreliable
  bool flagged = false;    // more than 10% of replicates failed
};

// Runs `config.reps` independent replicates, estimating every requested
// method on each and bootstrapping per-method intervals, then aggregates.
// Replicates run in parallel; output is identical for any thread count.
std::vector<MetricsRow> run_study(const SettingSpec& spec,
                                  const std::vector<Method>& methods,
                                  const StudyConfig& config);

// Point-estimate bias/spread per observation-model formula (plus the
// uncorrected complete-case baseline), for both estimator families.
struct SweepRow {
  std::string weights;  // "cc" or a formula string
  double bias_nonpar = 0.0, ese_nonpar = 0.0;
  double bias_par = 0.0, ese_par = 0.0;
  int failures_nonpar = 0, failures_par = 0;
};

// Re-estimates the IPW corrections under the five candidate observation
// models on shared replicates of setting 3 or 4.
std::vector<SweepRow> weight_misspec_sweep(const SettingSpec& spec, int reps,
                                           std::uint64_t seed, int threads = 1);

void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& out);
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace pte
