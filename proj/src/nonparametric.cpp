#include "pte/nonparametric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "pte/errors.hpp"
#include "pte/ipw.hpp"
#include "pte/parametric.hpp"

namespace pte {

double kernel_weight(KernelKind kind, double u) {
  const double t = 1.0 - u * u;
  if (t <= 0.0) return 0.0;
  switch (kind) {
    case KernelKind::Epanechnikov:
      return 0.75 * t;
    case KernelKind::Triweight:
      return (35.0 / 32.0) * t * t * t;
  }
  return 0.0;
}

namespace {

// Linear-interpolation quantile on a sorted copy (R type 7).
double quantile_sorted(const std::vector<double>& x, double p) {
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto i = static_cast<std::size_t>(h);
  if (i + 1 >= x.size()) return x.back();
  return x[i] + (h - static_cast<double>(i)) * (x[i + 1] - x[i]);
}

// Treated-arm sample sorted by s; the shared evaluation core.
struct SortedArm {
  std::vector<double> s, y, w;
};

NwValue nw_eval(const SortedArm& arm, double s0, const KernelSpec& kernel) {
  const double h = kernel.bandwidth;
  const auto lo = std::lower_bound(arm.s.begin(), arm.s.end(), s0 - h);
  const auto hi = std::upper_bound(lo, arm.s.end(), s0 + h);

  double num = 0.0, den = 0.0;
  for (auto it = lo; it != hi; ++it) {
    const auto j = static_cast<std::size_t>(it - arm.s.begin());
    const double kw = kernel_weight(kernel.kind, (arm.s[j] - s0) / h) * arm.w[j];
    num += kw * arm.y[j];
    den += kw;
  }
  if (den > 0.0) return {num / den, false};

  // No kernel mass reaches s0: average y over the nearest neighbors.
  const auto up = std::lower_bound(arm.s.begin(), arm.s.end(), s0);
  double best = std::numeric_limits<double>::infinity();
  if (up != arm.s.end()) best = *up - s0;
  if (up != arm.s.begin()) best = std::min(best, s0 - *(up - 1));

  double sum = 0.0;
  int count = 0;
  for (auto it = up; it != arm.s.end() && *it - s0 == best; ++it) {
    sum += arm.y[static_cast<std::size_t>(it - arm.s.begin())];
    ++count;
  }
  for (auto it = up; it != arm.s.begin();) {
    --it;
    if (s0 - *it != best) break;
    sum += arm.y[static_cast<std::size_t>(it - arm.s.begin())];
    ++count;
  }
  return {sum / count, true};
}

SortedArm sorted_by_s(std::vector<double> s, std::vector<double> y,
                      std::vector<double> w) {
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
  SortedArm arm;
  arm.s.reserve(s.size());
  arm.y.reserve(s.size());
  arm.w.reserve(s.size());
  for (const std::size_t j : order) {
    arm.s.push_back(s[j]);
    arm.y.push_back(y[j]);
    arm.w.push_back(w[j]);
  }
  return arm;
}

}  // namespace

double select_bandwidth(std::span<const double> s) {
  const auto m = s.size();
  if (m < 2) throw ValidationError("bandwidth selection needs at least 2 values");

  double mean = 0.0;
  for (const double v : s) mean += v;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (const double v : s) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (static_cast<double>(m) - 1.0));
  if (sd == 0.0) throw ZeroSpreadError("surrogate values have zero spread");

  std::vector<double> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

  double scale = std::min(sd, iqr / 1.34);
  if (scale == 0.0) scale = sd;
  return 0.9 * scale * std::pow(static_cast<double>(m), -0.3);
}

NwValue nw_conditional_mean(double s0, std::span<const double> s1,
                            std::span<const double> y1,
                            std::span<const double> w1, const KernelSpec& kernel) {
  if (s1.empty() || s1.size() != y1.size() || (!w1.empty() && w1.size() != s1.size())) {
    throw ValidationError("conditional-mean inputs are empty or mismatched");
  }
  if (!(kernel.bandwidth > 0.0)) throw ValidationError("bandwidth must be > 0");
  std::vector<double> w(w1.begin(), w1.end());
  if (w.empty()) w.assign(s1.size(), 1.0);
  for (const double v : w) {
    if (!(v >= 0.0)) throw ValidationError("smoother weights must be >= 0");
  }
  const SortedArm arm = sorted_by_s({s1.begin(), s1.end()}, {y1.begin(), y1.end()},
                                    std::move(w));
  return nw_eval(arm, s0, kernel);
}

OverlapReport check_overlap(const TrialData& data) {
  OverlapReport rep;
  bool any0 = false, any1 = false;
  rep.lo0 = rep.lo1 = std::numeric_limits<double>::infinity();
  rep.hi0 = rep.hi1 = -std::numeric_limits<double>::infinity();
  for (const auto& r : data.records) {
    if (!r.observed()) continue;
    if (r.z == 0) {
      any0 = true;
      rep.lo0 = std::min(rep.lo0, *r.s);
      rep.hi0 = std::max(rep.hi0, *r.s);
    } else {
      any1 = true;
      rep.lo1 = std::min(rep.lo1, *r.s);
      rep.hi1 = std::max(rep.hi1, *r.s);
    }
  }
  if (!any0 || !any1) {
    throw ValidationError("overlap check needs observed surrogates in both arms");
  }
  for (const auto& r : data.records) {
    if (r.z != 0 || !r.observed()) continue;
    if (*r.s < rep.lo1 || *r.s > rep.hi1) ++rep.n_outside;
  }
  rep.contained = rep.n_outside == 0;
  return rep;
}

NonparEstimate estimate_nonparametric(const TrialData& data, const WeightSet* ws,
                                      const std::optional<KernelSpec>& kernel) {
  if (ws != nullptr && ws->weight.size() != data.records.size()) {
    throw ValidationError("weight set does not match data size");
  }

  // Outcome means use every record unweighted: y is never missing, so the
  // overall effect needs no reweighting. Weights act only on the surrogate
  // side (the smoother and the control-arm average of smoothed values).
  double y_sum[2] = {0.0, 0.0};
  std::vector<double> s1, yy1, w1, s0, w0;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    y_sum[r.z] += r.y;
    const double wi = ws != nullptr ? ws->weight[i] : 1.0;
    if (!r.observed() || wi == 0.0) continue;
    if (r.z == 1) {
      s1.push_back(*r.s);
      yy1.push_back(r.y);
      w1.push_back(wi);
    } else {
      s0.push_back(*r.s);
      w0.push_back(wi);
    }
  }
  if (s0.empty()) throw ValidationError("arm 0 has no usable observed surrogate values");
  if (s1.size() < 2) throw ValidationError("arm 1 needs at least 2 usable observed surrogate values");

  NonparEstimate out;
  out.kernel = kernel ? *kernel : KernelSpec{};
  if (!(out.kernel.bandwidth > 0.0)) out.kernel.bandwidth = select_bandwidth(s1);
  out.overlap = check_overlap(data);

  const SortedArm arm = sorted_by_s(std::move(s1), std::move(yy1), std::move(w1));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s0.size(); ++i) {
    const NwValue v = nw_eval(arm, s0[i], out.kernel);
    num += w0[i] * v.value;
    den += w0[i];
    out.extrapolations += v.extrapolated ? 1 : 0;
  }

  const double mu_bar = num / den;
  const double ybar0 = y_sum[0] / data.n0;
  const double ybar1 = y_sum[1] / data.n1;
  EstimandSet est;
  est.delta = ybar1 - ybar0;
  est.delta_s = mu_bar - ybar0;
  if (est.delta == 0.0) {
    throw UndefinedPteError("overall treatment effect is zero; proportion explained undefined");
  }
  est.r_s = 1.0 - est.delta_s / est.delta;
  out.estimands = est;
  return out;
}

}  // namespace pte
