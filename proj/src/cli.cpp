#include "pte/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pte/bootstrap.hpp"
#include "pte/errors.hpp"
#include "pte/ipw.hpp"
#include "pte/nonparametric.hpp"
#include "pte/parallel.hpp"
#include "pte/parametric.hpp"
#include "pte/simulation.hpp"
#include "pte/smle.hpp"
#include "pte/trial_data.hpp"

namespace pte {
namespace {

using json = nlohmann::ordered_json;

struct EvalOpts {
  std::string input;
  std::string estimator = "parametric";
  std::string method = "cc";
  std::string weights;  // ipw formula terms; empty -> per-arm empirical rates
  std::optional<double> weight_cap;
  std::string kernel = "epanechnikov";
  std::optional<double> bandwidth;
  double tol = 1e-3;
  int max_iter = 500;
  int boot = 500;
  std::uint64_t seed = 0;
  std::string ci = "both";
  int threads = 0;  // 0 -> default_threads()
  std::string out;
};

struct SimOpts {
  int setting = 1;
  int n = 2000;
  int reps = 200;
  int boot = 500;
  std::uint64_t seed = 0;
  std::string methods;  // comma list; empty -> all
  std::string weights;  // IPW formula override
  std::optional<double> weight_cap;
  bool sweep = false;
  int threads = 0;
  std::string out;
};

json ci_json(const Ci& ci) { return json{{"lo", ci.lo}, {"hi", ci.hi}}; }

json component_json(const ComponentSummary& cs, const std::string& ci_mode) {
  json j;
  j["se"] = cs.se;
  if (ci_mode != "quantile") j["normal"] = ci_json(cs.wald);
  if (ci_mode != "normal") j["quantile"] = ci_json(cs.quantile);
  return j;
}

json estimands_json(const EstimandSet& e) {
  return json{{"delta", e.delta}, {"delta_s", e.delta_s}, {"r_s", e.r_s}};
}

json bootstrap_json(const BootstrapResult& b, const std::string& ci_mode) {
  json j;
  j["d"] = b.d_requested;
  j["d_effective"] = b.d_effective;
  j["failures"] = json::object();
  for (const auto& [kind, count] : b.failures) j["failures"][kind] = count;
  j["delta"] = component_json(b.delta, ci_mode);
  j["delta_s"] = component_json(b.delta_s, ci_mode);
  j["r_s"] = component_json(b.r_s, ci_mode);
  return j;
}

json data_json(const TrialData& data) {
  int miss[2] = {0, 0};
  for (const auto& r : data.records) miss[r.z] += r.observed() ? 0 : 1;
  const int n = data.size();
  json j;
  j["n"] = n;
  j["arm0"] = {{"n", data.n0},
               {"missing_fraction", data.n0 ? static_cast<double>(miss[0]) / data.n0 : 0.0}};
  j["arm1"] = {{"n", data.n1},
               {"missing_fraction", data.n1 ? static_cast<double>(miss[1]) / data.n1 : 0.0}};
  j["missing_fraction"] = n ? static_cast<double>(miss[0] + miss[1]) / n : 0.0;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file: " + path);
  out << text;
  if (!out) throw ValidationError("failed writing output file: " + path);
}

// ----- evaluate ------------------------------------------------------------

KernelKind parse_kernel(const std::string& name) {
  return name == "triweight" ? KernelKind::Triweight : KernelKind::Epanechnikov;
}

struct EvalSetup {
  bool nonpar = false;
  enum class M { Cc, Ipw, Smle } method = M::Cc;
  bool logistic = false;  // ipw: logistic formula vs empirical arm rates
  WeightFormula formula;
  std::optional<double> cap;
  std::optional<KernelSpec> kernel;  // bandwidth 0 -> auto, kind kept
  bool user_bandwidth = false;
  EmOptions em;
};

PteEstimator make_estimator(const EvalSetup& st) {
  using M = EvalSetup::M;
  const auto kernel = st.kernel;
  switch (st.method) {
    case M::Cc:
      if (st.nonpar)
        return [kernel](const TrialData& d) {
          return estimate_nonparametric(complete_cases(d), nullptr, kernel).estimands;
        };
      return [](const TrialData& d) { return estimate_parametric(complete_cases(d)); };
    case M::Ipw: {
      const bool logistic = st.logistic;
      const WeightFormula formula = st.formula;
      const auto cap = st.cap;
      const bool nonpar = st.nonpar;
      return [=](const TrialData& d) {
        const MissingnessModel model = logistic ? fit_missingness_logistic(d, formula)
                                                : fit_missingness_empirical(d);
        const WeightSet ws = weights_from_model(model, d, cap);
        if (nonpar) return estimate_nonparametric(d, &ws, kernel).estimands;
        return estimate_parametric(d, &ws);
      };
    }
    case M::Smle: {
      EmOptions em = st.em;
      em.observer = nullptr;
      return [em](const TrialData& d) { return estimate_smle(d, em).estimands; };
    }
  }
  throw ValidationError("unknown method");
}

void add_nonpar_diagnostics(json& diag, const NonparEstimate& est, bool user_bw,
                            std::vector<std::string>& warnings) {
  diag["kernel"] = est.kernel.kind == KernelKind::Triweight ? "triweight" : "epanechnikov";
  diag["bandwidth"] = {{"value", est.kernel.bandwidth}, {"source", user_bw ? "user" : "auto"}};
  diag["overlap"] = {{"contained", est.overlap.contained},
                     {"n_outside", est.overlap.n_outside},
                     {"arm0_range", json::array({est.overlap.lo0, est.overlap.hi0})},
                     {"arm1_range", json::array({est.overlap.lo1, est.overlap.hi1})}};
  diag["extrapolations"] = est.extrapolations;
  if (!est.overlap.contained)
    warnings.push_back("control-arm surrogates fall outside the treated-arm range (" +
                       std::to_string(est.overlap.n_outside) +
                       " records); smoothing there extrapolates and can bias the estimate");
  if (est.extrapolations > 0)
    warnings.push_back(std::to_string(est.extrapolations) +
                       " control-arm points received no kernel mass; nearest-neighbor "
                       "fallback was used");
}

void print_evaluate_table(const EstimandSet& point, const BootstrapResult* boot,
                          const std::string& ci_mode) {
  const char* names[3] = {"delta", "delta_s", "r_s"};
  const double values[3] = {point.delta, point.delta_s, point.r_s};
  const ComponentSummary* comps[3] = {nullptr, nullptr, nullptr};
  if (boot != nullptr) {
    comps[0] = &boot->delta;
    comps[1] = &boot->delta_s;
    comps[2] = &boot->r_s;
  }
  std::printf("%-10s %12s", "estimand", "point");
  if (boot != nullptr) {
    std::printf(" %10s", "se");
    if (ci_mode != "quantile") std::printf(" %22s", "normal 95%");
    if (ci_mode != "normal") std::printf(" %22s", "quantile 95%");
  }
  std::printf("\n");
  for (int i = 0; i < 3; ++i) {
    std::printf("%-10s %12.6f", names[i], values[i]);
    if (comps[i] != nullptr) {
      std::printf(" %10.6f", comps[i]->se);
      if (ci_mode != "quantile")
        std::printf("   [%8.6f, %8.6f]", comps[i]->wald.lo, comps[i]->wald.hi);
      if (ci_mode != "normal")
        std::printf("   [%8.6f, %8.6f]", comps[i]->quantile.lo, comps[i]->quantile.hi);
    }
    std::printf("\n");
  }
}

int run_evaluate(const EvalOpts& o, bool weights_given, bool cap_given, bool kernel_given,
                 bool bandwidth_given, bool tol_given, bool iter_given) {
  EvalSetup st;
  st.nonpar = o.estimator == "nonparametric";
  if (o.method == "cc") st.method = EvalSetup::M::Cc;
  else if (o.method == "ipw") st.method = EvalSetup::M::Ipw;
  else st.method = EvalSetup::M::Smle;

  if (st.method == EvalSetup::M::Smle && st.nonpar)
    throw ValidationError("smle runs in the parametric framework only");
  if ((weights_given || cap_given) && st.method != EvalSetup::M::Ipw)
    throw ValidationError("--weights/--weight-cap apply to --method ipw only");
  if ((kernel_given || bandwidth_given) && !st.nonpar)
    throw ValidationError("--kernel/--bandwidth apply to --estimator nonparametric only");
  if ((tol_given || iter_given) && st.method != EvalSetup::M::Smle)
    throw ValidationError("--tol/--max-iter apply to --method smle only");

  if (st.method == EvalSetup::M::Ipw) {
    st.logistic = !o.weights.empty();
    if (st.logistic) st.formula = WeightFormula::parse(o.weights);
    st.cap = o.weight_cap;
  }
  if (st.nonpar && (kernel_given || bandwidth_given)) {
    st.kernel = KernelSpec{parse_kernel(o.kernel), o.bandwidth.value_or(0.0)};
    st.user_bandwidth = bandwidth_given;
  }
  st.em.tol = o.tol;
  st.em.max_iter = o.max_iter;

  std::vector<std::string> warnings;
  const TrialData data = load_trial_csv(o.input, &warnings);

  // Point estimate with full diagnostics, piece by piece.
  json diag = json::object();
  EstimandSet point;
  if (st.method == EvalSetup::M::Cc) {
    const TrialData cc = complete_cases(data);
    diag["complete_cases"] = {{"n", cc.size()}, {"arm0", cc.n0}, {"arm1", cc.n1}};
    if (st.nonpar) {
      const NonparEstimate est = estimate_nonparametric(cc, nullptr, st.kernel);
      point = est.estimands;
      add_nonpar_diagnostics(diag, est, st.user_bandwidth, warnings);
    } else {
      point = estimate_parametric(cc);
    }
  } else if (st.method == EvalSetup::M::Ipw) {
    const MissingnessModel model = st.logistic ? fit_missingness_logistic(data, st.formula)
                                               : fit_missingness_empirical(data);
    const WeightSet ws = weights_from_model(model, data, st.cap);
    double plo = 1.0, phi = 0.0, wlo = 0.0, whi = 0.0;
    int capped = 0;
    bool any = false;
    for (std::size_t i = 0; i < ws.weight.size(); ++i) {
      plo = std::min(plo, ws.prob[i]);
      phi = std::max(phi, ws.prob[i]);
      if (ws.weight[i] == 0.0) continue;  // record with missing surrogate
      if (!any) wlo = whi = ws.weight[i];
      any = true;
      wlo = std::min(wlo, ws.weight[i]);
      whi = std::max(whi, ws.weight[i]);
      if (st.cap && ws.weight[i] == *st.cap) ++capped;
    }
    json wdiag;
    wdiag["model"] = st.logistic ? "logistic" : "empirical";
    wdiag["formula"] = st.logistic ? json(st.formula.str()) : json(nullptr);
    wdiag["coef"] = st.logistic ? json(model.coef) : json(nullptr);
    wdiag["arm_prob"] =
        st.logistic ? json(nullptr)
                    : json(json::array({model.arm_prob[0], model.arm_prob[1]}));
    wdiag["converged"] = model.converged;
    wdiag["separation"] = model.separation;
    wdiag["prob_range"] = json::array({plo, phi});
    wdiag["weight_range"] = json::array({wlo, whi});
    wdiag["capped"] = capped;
    diag["weights"] = wdiag;
    if (model.separation)
      warnings.push_back("observation model separated the data; weights may be extreme");
    if (!model.converged)
      warnings.push_back("observation model fit did not converge");
    if (st.nonpar) {
      const NonparEstimate est = estimate_nonparametric(data, &ws, st.kernel);
      point = est.estimands;
      add_nonpar_diagnostics(diag, est, st.user_bandwidth, warnings);
    } else {
      point = estimate_parametric(data, &ws);
    }
  } else {
    const SmleEstimate est = estimate_smle(data, st.em);
    point = est.estimands;
    const ArmMeans am = support_means(est.fit, est.support);
    diag["em"] = {{"iterations", est.fit.iterations},
                  {"converged", est.fit.converged},
                  {"sigma", est.fit.sigma},
                  {"sigma_floored", est.fit.sigma_floored},
                  {"beta", json(est.fit.beta)},
                  {"alpha", json::array({am.alpha0, am.alpha1})},
                  {"support", json::array({est.support.s0.size(), est.support.s1.size()})},
                  {"loglik", observed_data_loglik(est.fit, data, est.support)}};
    if (!est.fit.converged)
      warnings.push_back("EM reached the iteration cap before converging");
    if (est.fit.sigma_floored)
      warnings.push_back("outcome-model sd collapsed to the numerical floor");
  }

  std::optional<BootstrapResult> boot;
  if (o.boot > 0) {
    const int threads = o.threads > 0 ? o.threads : default_threads();
    boot = bootstrap_inference(data, make_estimator(st), o.boot, o.seed, threads, &point);
  }

  json report;
  report["command"] = "evaluate";
  json cfg;
  cfg["input"] = o.input;
  cfg["estimator"] = o.estimator;
  cfg["method"] = o.method;
  if (st.method == EvalSetup::M::Ipw) {
    cfg["weights"] = st.logistic ? json(st.formula.str()) : json("empirical");
    cfg["weight_cap"] = st.cap ? json(*st.cap) : json(nullptr);
  }
  if (st.nonpar) {
    cfg["kernel"] = kernel_given ? o.kernel : "epanechnikov";
    cfg["bandwidth"] = o.bandwidth ? json(*o.bandwidth) : json(nullptr);
  }
  if (st.method == EvalSetup::M::Smle) {
    cfg["tol"] = o.tol;
    cfg["max_iter"] = o.max_iter;
  }
  cfg["boot"] = o.boot;
  cfg["seed"] = o.seed;
  cfg["ci"] = o.ci;
  report["config"] = cfg;
  report["data"] = data_json(data);
  report["estimates"] = estimands_json(point);
  report["bootstrap"] = boot ? bootstrap_json(*boot, o.ci) : json(nullptr);
  report["diagnostics"] = diag;
  report["warnings"] = warnings;

  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  const std::string text = report.dump(2) + "\n";
  if (o.out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    write_text(o.out, text);
    print_evaluate_table(point, boot ? &*boot : nullptr, o.ci);
  }
  return kExitOk;
}

// ----- simulate ------------------------------------------------------------

std::vector<Method> resolve_methods(const std::string& list) {
  std::vector<Method> chosen;
  if (list.empty()) {
    chosen.assign(kAllMethods.begin(), kAllMethods.end());
  } else {
    std::stringstream ss(list);
    std::string tok;
    std::set<Method> seen;
    while (std::getline(ss, tok, ',')) {
      tok.erase(std::remove(tok.begin(), tok.end(), ' '), tok.end());
      if (tok.empty()) continue;
      const auto m = parse_method(tok);
      if (!m) throw ValidationError("unknown method: " + tok);
      seen.insert(*m);
    }
    if (seen.empty()) throw ValidationError("no methods requested");
    // Efficiency ratios need the same-family gold row; pull it in silently.
    const bool nonpar = seen.count(Method::CcNonpar) || seen.count(Method::IpwNonpar);
    const bool par =
        seen.count(Method::CcPar) || seen.count(Method::IpwPar) || seen.count(Method::Smle);
    if (nonpar) seen.insert(Method::GoldNonpar);
    if (par) seen.insert(Method::GoldPar);
    for (Method m : kAllMethods)
      if (seen.count(m)) chosen.push_back(m);
  }
  return chosen;
}

void print_metrics_table(const std::vector<MetricsRow>& rows) {
  std::printf("%-12s %5s %8s %8s %7s %7s %6s %6s %7s %5s\n", "method", "used", "bias",
              "%bias", "ese", "ase", "cp_n", "cp_q", "re", "fail");
  for (const auto& r : rows)
    std::printf("%-12s %5d %8.4f %8.3f %7.4f %7.4f %6.3f %6.3f %7.3f %5d%s\n",
                r.method.c_str(), r.used, r.bias, r.pct_bias, r.ese, r.ase, r.cp_n,
                r.cp_q, r.re, r.est_failures, r.flagged ? "  <- flagged" : "");
}

void print_sweep_table(const std::vector<SweepRow>& rows) {
  std::printf("%-10s %12s %12s %12s %12s\n", "weights", "bias_nonpar", "ese_nonpar",
              "bias_par", "ese_par");
  for (const auto& r : rows)
    std::printf("%-10s %12.4f %12.4f %12.4f %12.4f\n", r.weights.c_str(), r.bias_nonpar,
                r.ese_nonpar, r.bias_par, r.ese_par);
}

json metrics_rows_json(const std::vector<MetricsRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json j;
    j["method"] = r.method;
    j["reps"] = r.reps;
    j["used"] = r.used;
    j["bias"] = r.bias;
    j["pct_bias"] = r.pct_bias;
    j["ese"] = r.ese;
    j["ase"] = r.ase;
    j["cp_n"] = r.cp_n;
    j["cp_q"] = r.cp_q;
    j["re"] = r.re;
    j["est_failures"] = r.est_failures;
    j["boot_failures"] = r.boot_failures;
    j["flagged"] = r.flagged;
    arr.push_back(std::move(j));
  }
  return arr;
}

json sweep_rows_json(const std::vector<SweepRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json j;
    j["weights"] = r.weights;
    j["bias_nonpar"] = r.bias_nonpar;
    j["ese_nonpar"] = r.ese_nonpar;
    j["bias_par"] = r.bias_par;
    j["ese_par"] = r.ese_par;
    j["failures_nonpar"] = r.failures_nonpar;
    j["failures_par"] = r.failures_par;
    arr.push_back(std::move(j));
  }
  return arr;
}

int run_simulate(const SimOpts& o, bool methods_given, bool boot_given, bool weights_given) {
  SettingSpec spec = SettingSpec::standard(o.setting);
  spec.n = o.n;
  const int threads = o.threads > 0 ? o.threads : default_threads();

  enum class Sink { Stdout, Csv, Json } sink = Sink::Stdout;
  if (!o.out.empty()) {
    if (o.out.size() > 4 && o.out.rfind(".csv") == o.out.size() - 4) sink = Sink::Csv;
    else if (o.out.size() > 5 && o.out.rfind(".json") == o.out.size() - 5) sink = Sink::Json;
    else throw ValidationError("--out must end in .csv or .json");
  }

  json report;
  report["command"] = "simulate";
  std::string csv;

  if (o.sweep) {
    if (methods_given || boot_given || weights_given)
      throw ValidationError("--methods/--boot/--weights do not combine with --sweep-weights");
    const auto rows = weight_misspec_sweep(spec, o.reps, o.seed, threads);
    report["mode"] = "weight-sweep";
    report["config"] = {{"setting", o.setting}, {"n", o.n}, {"reps", o.reps}, {"seed", o.seed}};
    report["truth"] = estimands_json(spec.truth());
    report["rows"] = sweep_rows_json(rows);
    if (sink != Sink::Stdout) print_sweep_table(rows);
    if (sink == Sink::Csv) {
      std::ostringstream out;
      write_sweep_csv(rows, out);
      csv = out.str();
    }
  } else {
    const std::vector<Method> methods = resolve_methods(o.methods);
    StudyConfig cfg;
    cfg.reps = o.reps;
    cfg.boot_d = o.boot;
    cfg.seed = o.seed;
    cfg.threads = threads;
    if (!o.weights.empty()) cfg.ipw_formula = WeightFormula::parse(o.weights);
    cfg.weight_cap = o.weight_cap;
    const auto rows = run_study(spec, methods, cfg);
    report["mode"] = "study";
    json mj = json::array();
    for (Method m : methods) mj.push_back(method_label(m));
    report["config"] = {{"setting", o.setting},
                        {"n", o.n},
                        {"reps", o.reps},
                        {"boot", o.boot},
                        {"seed", o.seed},
                        {"methods", mj},
                        {"weights", o.weights.empty()
                                        ? json(default_ipw_formula(spec).str())
                                        : json(o.weights)}};
    report["truth"] = estimands_json(spec.truth());
    report["rows"] = metrics_rows_json(rows);
    if (sink != Sink::Stdout) print_metrics_table(rows);
    if (sink == Sink::Csv) {
      std::ostringstream out;
      write_metrics_csv(rows, out);
      csv = out.str();
    }
  }

  switch (sink) {
    case Sink::Stdout: {
      const std::string text = report.dump(2) + "\n";
      std::fwrite(text.data(), 1, text.size(), stdout);
      break;
    }
    case Sink::Json:
      write_text(o.out, report.dump(2) + "\n");
      break;
    case Sink::Csv:
      write_text(o.out, csv);
      break;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"surrogate-marker treatment-effect decomposition"};
  app.require_subcommand(1);

  EvalOpts eo;
  auto* ev = app.add_subcommand("evaluate", "estimate from a trial CSV (columns y,s,z)");
  ev->add_option("input", eo.input, "trial CSV path")->required();
  ev->add_option("--estimator", eo.estimator, "parametric | nonparametric")
      ->check(CLI::IsMember({"parametric", "nonparametric"}));
  ev->add_option("--method", eo.method, "cc | ipw | smle")
      ->check(CLI::IsMember({"cc", "ipw", "smle"}));
  auto* ev_w = ev->add_option(
      "--weights", eo.weights,
      "ipw observation-model terms, e.g. z | y | y,z | y,y:z (default: per-arm rates)");
  auto* ev_cap = ev->add_option("--weight-cap", eo.weight_cap, "truncate weights at this value")
                     ->check(CLI::Range(1.0, 1e300));
  auto* ev_k = ev->add_option("--kernel", eo.kernel, "epanechnikov | triweight")
                   ->check(CLI::IsMember({"epanechnikov", "triweight"}));
  auto* ev_bw = ev->add_option("--bandwidth", eo.bandwidth, "smoothing bandwidth (default: rule of thumb)")
                    ->check(CLI::PositiveNumber);
  auto* ev_tol = ev->add_option("--tol", eo.tol, "EM convergence tolerance")
                     ->check(CLI::PositiveNumber);
  auto* ev_it = ev->add_option("--max-iter", eo.max_iter, "EM iteration cap")
                    ->check(CLI::Range(1, 1000000));
  ev->add_option("--boot", eo.boot, "bootstrap replicates (0 = point estimate only)")
      ->check(CLI::Range(0, 1000000));
  ev->add_option("--seed", eo.seed, "random seed");
  ev->add_option("--ci", eo.ci, "normal | quantile | both")
      ->check(CLI::IsMember({"normal", "quantile", "both"}));
  ev->add_option("--threads", eo.threads, "worker threads (default: hardware)")
      ->check(CLI::Range(1, 4096));
  ev->add_option("--out", eo.out, "write the JSON report here (table goes to stdout)");

  SimOpts so;
  auto* sim = app.add_subcommand("simulate", "run the Monte Carlo bench");
  sim->add_option("--setting", so.setting, "scenario 1..5")->required();
  sim->add_option("--n", so.n, "records per replicate")->check(CLI::Range(4, 100000000));
  sim->add_option("--reps", so.reps, "Monte Carlo replicates")->check(CLI::Range(1, 100000000));
  auto* sim_boot = sim->add_option("--boot", so.boot, "bootstrap replicates per estimate (0 = none)")
                       ->check(CLI::Range(0, 1000000));
  sim->add_option("--seed", so.seed, "random seed");
  auto* sim_m = sim->add_option("--methods", so.methods,
                                "comma list: gold-nonpar,cc-nonpar,ipw-nonpar,gold-par,cc-par,"
                                "ipw-par,smle (default: all)");
  auto* sim_w = sim->add_option("--weights", so.weights,
                                "IPW observation-model terms (default: the setting's own law)");
  sim->add_option("--weight-cap", so.weight_cap, "truncate weights at this value")
      ->check(CLI::Range(1.0, 1e300));
  sim->add_flag("--sweep-weights", so.sweep,
                "compare candidate observation models (settings 3 and 4)");
  sim->add_option("--threads", so.threads, "worker threads (default: hardware)")
      ->check(CLI::Range(1, 4096));
  sim->add_option("--out", so.out, "result table path, .csv or .json (default: JSON to stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (ev->parsed())
      return run_evaluate(eo, ev_w->count() > 0, ev_cap->count() > 0, ev_k->count() > 0,
                          ev_bw->count() > 0, ev_tol->count() > 0, ev_it->count() > 0);
    return run_simulate(so, sim_m->count() > 0, sim_boot->count() > 0, sim_w->count() > 0);
  } catch (const InferenceUnreliableError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUnreliable;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace pte
