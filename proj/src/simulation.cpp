#include "pte/simulation.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <utility>

#include "pte/bootstrap.hpp"
#include "pte/errors.hpp"
#include "pte/nonparametric.hpp"
#include "pte/parallel.hpp"
#include "pte/parametric.hpp"
#include "pte/rng.hpp"
#include "pte/smle.hpp"

namespace pte {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNan;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  if (v.size() < 2) return kNan;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

double MissingnessLaw::prob(double y, int z) const {
  if (constant) return rate;
  const double eta = b0 + by * y + bz * z + byz * y * z;
  return 1.0 / (1.0 + std::exp(-eta));
}

SettingSpec SettingSpec::standard(int id) {
  SettingSpec spec;
  spec.id = id;
  switch (id) {
    case 1:
      spec.law.constant = true;
      spec.law.rate = 0.65;
      break;
    case 2:
      spec.law.b0 = 0.4;
      spec.law.bz = 0.2;
      break;
    case 3:
      spec.law.by = 0.015;
      break;
    case 4:
      spec.law.by = 0.015;
      spec.law.byz = 0.015;
      break;
    case 5:
      spec.law.by = 0.015;
      spec.s_var[1] = 0.25;
      break;
    default:
      throw ValidationError("unknown setting id " + std::to_string(id) +
                            " (expected 1..5)");
  }
  return spec;
}

EstimandSet SettingSpec::truth() const {
  const double a0 = s_mean[0], a1 = s_mean[1];
  EstimandSet t;
  t.delta = beta[1] + (beta[2] + beta[3]) * a1 - beta[2] * a0;
  t.delta_s = beta[1] + beta[3] * a0;
  if (t.delta == 0.0) throw UndefinedPteError("setting has zero overall effect");
  t.r_s = 1.0 - t.delta_s / t.delta;
  return t;
}

GeneratedTrial generate_trial(const SettingSpec& spec, std::uint64_t seed,
                              std::uint64_t replicate) {
  if (spec.n < 4 || spec.n % 2 != 0)
    throw ValidationError("trial size must be even and at least 4, got " +
                          std::to_string(spec.n));
  if (spec.s_var[0] <= 0.0 || spec.s_var[1] <= 0.0)
    throw ValidationError("surrogate variances must be positive");
  if (spec.noise_sd < 0.0) throw ValidationError("noise sd must be nonnegative");

  RngStream s_rng(seed, StreamId::Surrogate, replicate);
  RngStream e_rng(seed, StreamId::Noise, replicate);
  RngStream o_rng(seed, StreamId::Missingness, replicate);

  const int half = spec.n / 2;
  const std::array<double, 2> s_sd = {std::sqrt(spec.s_var[0]),
                                      std::sqrt(spec.s_var[1])};
  std::vector<PatientRecord> full, masked;
  full.reserve(spec.n);
  masked.reserve(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    const int z = i < half ? 0 : 1;
    const double s = s_rng.normal(spec.s_mean[z], s_sd[z]);
    const double eps = e_rng.normal(0.0, spec.noise_sd);
    const double y =
        spec.beta[0] + spec.beta[1] * z + spec.beta[2] * s + spec.beta[3] * s * z + eps;
    const bool observed = o_rng.bernoulli(spec.law.prob(y, z));
    full.push_back({y, s, z});
    masked.push_back({y, observed ? std::optional<double>(s) : std::nullopt, z});
  }

  GeneratedTrial out{TrialData::from_records(std::move(full)),
                     TrialData::from_records(std::move(masked)), spec.truth()};
  return out;
}

std::string method_label(Method m) {
  switch (m) {
    case Method::GoldNonpar: return "gold-nonpar";
    case Method::CcNonpar: return "cc-nonpar";
    case Method::IpwNonpar: return "ipw-nonpar";
    case Method::GoldPar: return "gold-par";
    case Method::CcPar: return "cc-par";
    case Method::IpwPar: return "ipw-par";
    case Method::Smle: return "smle";
  }
  throw ValidationError("unknown method");
}

std::optional<Method> parse_method(const std::string& label) {
  for (Method m : kAllMethods)
    if (method_label(m) == label) return m;
  return std::nullopt;
}

WeightFormula default_ipw_formula(const SettingSpec& spec) {
  WeightFormula f;
  if (spec.law.constant) {
    f.has_z = true;  // arm observation rates; correct under a flat mechanism
    return f;
  }
  f.has_y = spec.law.by != 0.0;
  f.has_z = spec.law.bz != 0.0;
  f.has_yz = spec.law.byz != 0.0;
  if (!f.has_y && !f.has_z && !f.has_yz) f.has_z = true;
  return f;
}

namespace {

// Point estimator for one method, refit from scratch on any dataset handed
// to it so bootstrap replicates propagate every fitting step.
PteEstimator method_estimator(Method m, const WeightFormula& formula,
                              std::optional<double> cap) {
  switch (m) {
    case Method::GoldPar:
    case Method::CcPar:
      return [](const TrialData& d) { return estimate_parametric(complete_cases(d)); };
    case Method::GoldNonpar:
    case Method::CcNonpar:
      return [](const TrialData& d) {
        return estimate_nonparametric(complete_cases(d)).estimands;
      };
    case Method::IpwPar:
      return [formula, cap](const TrialData& d) {
        const auto model = fit_missingness_logistic(d, formula);
        const auto ws = weights_from_model(model, d, cap);
        return estimate_parametric(d, &ws);
      };
    case Method::IpwNonpar:
      return [formula, cap](const TrialData& d) {
        const auto model = fit_missingness_logistic(d, formula);
        const auto ws = weights_from_model(model, d, cap);
        return estimate_nonparametric(d, &ws).estimands;
      };
    case Method::Smle:
      return [](const TrialData& d) { return estimate_smle(d).estimands; };
  }
  throw ValidationError("unknown method");
}

struct RepCell {
  bool have_point = false;
  double r_s = kNan;
  std::string fail_kind;
  bool have_boot = false;
  bool boot_failed = false;
  double se = kNan;
  Ci wald, quant;
};

}  // namespace

std::vector<MetricsRow> run_study(const SettingSpec& spec,
                                  const std::vector<Method>& methods,
                                  const StudyConfig& config) {
  if (config.reps < 1) throw ValidationError("reps must be at least 1");
  if (config.boot_d < 0) throw ValidationError("bootstrap draw count must be >= 0");
  if (methods.empty()) throw ValidationError("no methods requested");

  const EstimandSet truth = spec.truth();
  const WeightFormula formula =
      config.ipw_formula ? *config.ipw_formula : default_ipw_formula(spec);

  const int n_methods = static_cast<int>(methods.size());
  std::vector<PteEstimator> estimators;
  estimators.reserve(methods.size());
  for (Method m : methods)
    estimators.push_back(method_estimator(m, formula, config.weight_cap));

  // cells[mi][r]; each replicate writes only its own column.
  std::vector<std::vector<RepCell>> cells(
      n_methods, std::vector<RepCell>(static_cast<std::size_t>(config.reps)));

  parallel_for(config.reps, config.threads, [&](int r) {
    const GeneratedTrial gen =
        generate_trial(spec, config.seed, static_cast<std::uint64_t>(r));
    for (int mi = 0; mi < n_methods; ++mi) {
      const Method m = methods[static_cast<std::size_t>(mi)];
      const bool gold = m == Method::GoldPar || m == Method::GoldNonpar;
      const TrialData& data = gold ? gen.full : gen.masked;
      RepCell& cell = cells[static_cast<std::size_t>(mi)][static_cast<std::size_t>(r)];

      EstimandSet point;
      try {
        point = estimators[static_cast<std::size_t>(mi)](data);
        cell.have_point = true;
        cell.r_s = point.r_s;
      } catch (const Error& e) {
        cell.fail_kind = e.kind();
        continue;
      }

      if (config.boot_d == 0) continue;
      const std::uint64_t boot_seed = derive_seed(
          config.seed, static_cast<std::uint64_t>(r) * 16 + static_cast<std::uint64_t>(mi));
      try {
        const BootstrapResult boot =
            bootstrap_inference(data, estimators[static_cast<std::size_t>(mi)],
                                config.boot_d, boot_seed, 1, &point);
        cell.have_boot = true;
        cell.se = boot.r_s.se;
        cell.wald = boot.r_s.wald;
        cell.quant = boot.r_s.quantile;
      } catch (const Error&) {
        cell.boot_failed = true;  // keep the point, drop the intervals
      }
    }
  });

  // Family gold variances for the efficiency column.
  auto points_of = [&](int mi) {
    std::vector<double> v;
    for (const RepCell& c : cells[static_cast<std::size_t>(mi)])
      if (c.have_point) v.push_back(c.r_s);
    return v;
  };
  double gold_var_nonpar = kNan, gold_var_par = kNan;
  for (int mi = 0; mi < n_methods; ++mi) {
    if (methods[static_cast<std::size_t>(mi)] == Method::GoldNonpar)
      gold_var_nonpar = variance_of(points_of(mi));
    if (methods[static_cast<std::size_t>(mi)] == Method::GoldPar)
      gold_var_par = variance_of(points_of(mi));
  }

  std::vector<MetricsRow> rows;
  rows.reserve(methods.size());
  for (int mi = 0; mi < n_methods; ++mi) {
    const Method m = methods[static_cast<std::size_t>(mi)];
    MetricsRow row;
    row.method = method_label(m);
    row.reps = config.reps;

    const std::vector<double> points = points_of(mi);
    row.used = static_cast<int>(points.size());
    row.est_failures = config.reps - row.used;
    row.flagged = row.est_failures * 10 > config.reps;
    row.bias = mean_of(points) - truth.r_s;
    row.pct_bias = 100.0 * row.bias / truth.r_s;
    row.ese = std::sqrt(variance_of(points));

    std::vector<double> ses;
    int covered_n = 0, covered_q = 0, with_boot = 0;
    for (const RepCell& c : cells[static_cast<std::size_t>(mi)]) {
      if (c.boot_failed) ++row.boot_failures;
      if (!c.have_boot) continue;
      ++with_boot;
      ses.push_back(c.se);
      if (c.wald.lo <= truth.r_s && truth.r_s <= c.wald.hi) ++covered_n;
      if (c.quant.lo <= truth.r_s && truth.r_s <= c.quant.hi) ++covered_q;
    }
    row.ase = mean_of(ses);
    row.cp_n = with_boot ? static_cast<double>(covered_n) / with_boot : kNan;
    row.cp_q = with_boot ? static_cast<double>(covered_q) / with_boot : kNan;

    const bool nonpar_family = m == Method::GoldNonpar || m == Method::CcNonpar ||
                               m == Method::IpwNonpar;
    if (m == Method::GoldNonpar || m == Method::GoldPar) {
      row.re = 1.0;
    } else {
      const double gv = nonpar_family ? gold_var_nonpar : gold_var_par;
      row.re = gv / variance_of(points);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> weight_misspec_sweep(const SettingSpec& spec, int reps,
                                           std::uint64_t seed, int threads) {
  if (spec.id != 3 && spec.id != 4)
    throw ValidationError("weight sweep runs on settings 3 or 4 only");
  if (reps < 2) throw ValidationError("sweep needs at least 2 replicates");

  const EstimandSet truth = spec.truth();
  const std::array<const char*, 5> formulas = {"y", "z", "y,z", "y,z,y:z", "y,y:z"};
  const int n_versions = 1 + static_cast<int>(formulas.size());  // cc first

  struct Cell {
    double nonpar = kNan, par = kNan;
  };
  std::vector<std::vector<Cell>> cells(
      static_cast<std::size_t>(n_versions),
      std::vector<Cell>(static_cast<std::size_t>(reps)));

  parallel_for(reps, threads, [&](int r) {
    const GeneratedTrial gen =
        generate_trial(spec, seed, static_cast<std::uint64_t>(r));
    const TrialData cc = complete_cases(gen.masked);

    auto put = [&](int vi, bool par, double value) {
      Cell& c = cells[static_cast<std::size_t>(vi)][static_cast<std::size_t>(r)];
      (par ? c.par : c.nonpar) = value;
    };
    try {
      put(0, false, estimate_nonparametric(cc).estimands.r_s);
    } catch (const Error&) {
    }
    try {
      put(0, true, estimate_parametric(cc).r_s);
    } catch (const Error&) {
    }

    for (int fi = 0; fi < static_cast<int>(formulas.size()); ++fi) {
      const WeightFormula formula =
          WeightFormula::parse(formulas[static_cast<std::size_t>(fi)]);
      WeightSet ws;
      try {
        const auto model = fit_missingness_logistic(gen.masked, formula);
        ws = weights_from_model(model, gen.masked);
      } catch (const Error&) {
        continue;  // both families lose this replicate
      }
      try {
        put(fi + 1, false, estimate_nonparametric(gen.masked, &ws).estimands.r_s);
      } catch (const Error&) {
      }
      try {
        put(fi + 1, true, estimate_parametric(gen.masked, &ws).r_s);
      } catch (const Error&) {
      }
    }
  });

  std::vector<SweepRow> rows;
  rows.reserve(static_cast<std::size_t>(n_versions));
  for (int vi = 0; vi < n_versions; ++vi) {
    SweepRow row;
    row.weights = vi == 0 ? "cc" : formulas[static_cast<std::size_t>(vi - 1)];
    std::vector<double> np, pr;
    for (const Cell& c : cells[static_cast<std::size_t>(vi)]) {
      if (!std::isnan(c.nonpar)) np.push_back(c.nonpar);
      if (!std::isnan(c.par)) pr.push_back(c.par);
    }
    row.failures_nonpar = reps - static_cast<int>(np.size());
    row.failures_par = reps - static_cast<int>(pr.size());
    row.bias_nonpar = mean_of(np) - truth.r_s;
    row.ese_nonpar = std::sqrt(variance_of(np));
    row.bias_par = mean_of(pr) - truth.r_s;
    row.ese_par = std::sqrt(variance_of(pr));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& out) {
  out << "method,reps,used,bias,pct_bias,ese,ase,cp_n,cp_q,re,"
         "est_failures,boot_failures,flagged\n";
  for (const MetricsRow& r : rows) {
    out << r.method << ',' << r.reps << ',' << r.used << ',' << fmt(r.bias) << ','
        << fmt(r.pct_bias) << ',' << fmt(r.ese) << ',' << fmt(r.ase) << ','
        << fmt(r.cp_n) << ',' << fmt(r.cp_q) << ',' << fmt(r.re) << ','
        << r.est_failures << ',' << r.boot_failures << ','
        << (r.flagged ? "true" : "false") << '\n';
  }
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "weights,bias_nonpar,ese_nonpar,bias_par,ese_par,"
         "failures_nonpar,failures_par\n";
  for (const SweepRow& r : rows) {
    out << '"' << r.weights << "\"," << fmt(r.bias_nonpar) << ','
        << fmt(r.ese_nonpar) << ',' << fmt(r.bias_par) << ',' << fmt(r.ese_par)
        << ',' << r.failures_nonpar << ',' << r.failures_par << '\n';
  }
}

}  // namespace pte
