#include "pte/parametric.hpp"

#include <cmath>
#include <vector>

#include "pte/errors.hpp"
#include "pte/ipw.hpp"
#include "wls_core.hpp"

namespace pte {

LinearFit fit_wls(std::span<const RegObs> obs, std::span<const double> weights) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  if (!weights.empty() && weights.size() != obs.size()) {
    throw ValidationError("weight count does not match observation count");
  }
  for (const double w : weights) {
    if (!(w > 0.0)) throw ValidationError("regression weights must be > 0");
  }

  Eigen::MatrixXd A(n, 4);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs[static_cast<std::size_t>(i)];
    const double sw = weights.empty()
                          ? 1.0
                          : std::sqrt(weights[static_cast<std::size_t>(i)]);
    A(i, 0) = sw;
    A(i, 1) = sw * o.z;
    A(i, 2) = sw * o.s;
    A(i, 3) = sw * o.s * o.z;
    b(i) = sw * o.y;
  }

  const Eigen::VectorXd beta = detail::solve_scaled_lsq(A, b);

  double rss = 0.0, wsum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs[static_cast<std::size_t>(i)];
    const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
    const double fitted =
        beta(0) + beta(1) * o.z + beta(2) * o.s + beta(3) * o.s * o.z;
    const double r = o.y - fitted;
    rss += w * r * r;
    wsum += w;
  }

  LinearFit fit;
  for (int j = 0; j < 4; ++j) fit.beta[static_cast<std::size_t>(j)] = beta(j);
  fit.sigma = std::sqrt(rss / wsum);
  return fit;
}

EstimandSet pte_from_components(const LinearFit& fit, const ArmMeans& means) {
  const auto& b = fit.beta;
  EstimandSet est;
  est.delta = b[1] + (b[2] + b[3]) * means.alpha1 - b[2] * means.alpha0;
  est.delta_s = b[1] + b[3] * means.alpha0;
  if (est.delta == 0.0) {
    throw UndefinedPteError("overall treatment effect is zero; proportion explained undefined");
  }
  est.r_s = 1.0 - est.delta_s / est.delta;
  return est;
}

EstimandSet estimate_parametric(const TrialData& data, const WeightSet* ws) {
  if (ws != nullptr && ws->weight.size() != data.records.size()) {
    throw ValidationError("weight set does not match data size");
  }

  std::vector<RegObs> obs;
  std::vector<double> w;
  obs.reserve(data.records.size());
  w.reserve(data.records.size());
  // Weighted surrogate totals per arm for the alpha means.
  double s_sum[2] = {0.0, 0.0};
  double w_sum[2] = {0.0, 0.0};

  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    if (!r.observed()) continue;
    const double wi = ws != nullptr ? ws->weight[i] : 1.0;
    if (wi == 0.0) continue;  // capped-out / untracked record
    obs.push_back({r.y, *r.s, r.z});
    w.push_back(wi);
    s_sum[r.z] += wi * *r.s;
    w_sum[r.z] += wi;
  }

  if (w_sum[0] <= 0.0) throw ValidationError("arm 0 has no usable observed surrogate values");
  if (w_sum[1] <= 0.0) throw ValidationError("arm 1 has no usable observed surrogate values");

  const LinearFit fit = fit_wls(obs, w);
  const ArmMeans means{s_sum[0] / w_sum[0], s_sum[1] / w_sum[1]};
  return pte_from_components(fit, means);
}

}  // namespace pte
