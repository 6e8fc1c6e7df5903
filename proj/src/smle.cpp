#include "pte/smle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "pte/errors.hpp"
#include "wls_core.hpp"

namespace pte {

namespace {

constexpr double kSigmaFloor = 1e-6;

std::size_t support_index(const std::vector<double>& support, double value) {
  const auto it = std::lower_bound(support.begin(), support.end(), value);
  if (it == support.end() || *it != value) {
    throw ValidationError("observed surrogate value is not on the support");
  }
  return static_cast<std::size_t>(it - support.begin());
}

// Per-arm slice of the data in the layout the EM loop wants.
struct ArmSlice {
  Eigen::ArrayXd s, s2;          // support and its square
  Eigen::ArrayXd obs_count;      // observed multiplicity per support point
  std::vector<double> y_missing; // outcomes with missing surrogate
  // Fixed observed-row moments: count, sum s, sum s^2, sum y, sum s*y, sum y^2.
  double m_w = 0, m_s = 0, m_ss = 0, m_y = 0, m_sy = 0, m_yy = 0;
};

ArmSlice make_slice(const TrialData& data, const SupportSet& support, int z) {
  const auto& sup = support.arm(z);
  const auto m = static_cast<Eigen::Index>(sup.size());
  ArmSlice slice;
  slice.s.resize(m);
  slice.s2.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    slice.s(k) = sup[static_cast<std::size_t>(k)];
    slice.s2(k) = sup[static_cast<std::size_t>(k)] * sup[static_cast<std::size_t>(k)];
  }
  slice.obs_count = Eigen::ArrayXd::Zero(m);
  for (const auto& r : data.records) {
    if (r.z != z) continue;
    if (r.observed()) {
      const auto k = support_index(sup, *r.s);
      slice.obs_count(static_cast<Eigen::Index>(k)) += 1.0;
      slice.m_w += 1.0;
      slice.m_s += *r.s;
      slice.m_ss += *r.s * *r.s;
      slice.m_y += r.y;
      slice.m_sy += *r.s * r.y;
      slice.m_yy += r.y * r.y;
    } else {
      slice.y_missing.push_back(r.y);
    }
  }
  return slice;
}

}  // namespace

SupportSet build_support(const TrialData& data) {
  SupportSet sup;
  for (const auto& r : data.records) {
    if (!r.observed()) continue;
    (r.z == 0 ? sup.s0 : sup.s1).push_back(*r.s);
  }
  for (auto* v : {&sup.s0, &sup.s1}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  if (sup.s0.size() < 2 || sup.s1.size() < 2) {
    throw ValidationError(
        "each arm needs at least 2 distinct observed surrogate values");
  }
  return sup;
}

PhiMatrix e_step(const SmleFit& params, const TrialData& data,
                 const SupportSet& support) {
  if (params.p0.size() != support.s0.size() || params.p1.size() != support.s1.size()) {
    throw ValidationError("mass vectors do not match the support");
  }
  const double inv2s2 = 1.0 / (2.0 * params.sigma * params.sigma);

  PhiMatrix phi;
  phi.rows.reserve(data.records.size());
  for (const auto& r : data.records) {
    const auto& sup = support.arm(r.z);
    const auto& p = params.mass(r.z);
    std::vector<double> row(sup.size(), 0.0);
    if (r.observed()) {
      row[support_index(sup, *r.s)] = 1.0;
    } else {
      const double a = params.beta[0] + params.beta[1] * r.z;
      const double b = params.beta[2] + params.beta[3] * r.z;
      // log weights, normalized in log space to dodge underflow
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < sup.size(); ++k) {
        const double resid = r.y - (a + b * sup[k]);
        row[k] = p[k] > 0.0 ? std::log(p[k]) - resid * resid * inv2s2
                            : -std::numeric_limits<double>::infinity();
        best = std::max(best, row[k]);
      }
      if (!std::isfinite(best)) {
        throw NumericalError("posterior mass vanished for a missing-surrogate record");
      }
      double sum = 0.0;
      for (double& v : row) {
        v = std::exp(v - best);
        sum += v;
      }
      for (double& v : row) v /= sum;
    }
    phi.rows.push_back(std::move(row));
  }
  return phi;
}

MStepResult m_step(const PhiMatrix& phi, const TrialData& data,
                   const SupportSet& support) {
  if (phi.rows.size() != data.records.size()) {
    throw ValidationError("phi rows do not match the data");
  }

  std::vector<RegObs> obs;
  std::vector<double> w;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    const auto& sup = support.arm(r.z);
    if (phi.rows[i].size() != sup.size()) {
      throw ValidationError("phi row does not match the support");
    }
    for (std::size_t k = 0; k < sup.size(); ++k) {
      if (phi.rows[i][k] == 0.0) continue;  // exact zeros contribute nothing
      obs.push_back({r.y, sup[k], r.z});
      w.push_back(phi.rows[i][k]);
    }
  }

  MStepResult out;
  out.fit = fit_wls(obs, w);

  out.p0.assign(support.s0.size(), 0.0);
  out.p1.assign(support.s1.size(), 0.0);
  double tot0 = 0.0, tot1 = 0.0;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    auto& target = data.records[i].z == 0 ? out.p0 : out.p1;
    double& tot = data.records[i].z == 0 ? tot0 : tot1;
    for (std::size_t k = 0; k < target.size(); ++k) {
      target[k] += phi.rows[i][k];
      tot += phi.rows[i][k];
    }
  }
  for (double& v : out.p0) v /= tot0;
  for (double& v : out.p1) v /= tot1;
  return out;
}

SmleFit em_fit(const TrialData& data, const EmOptions& opts) {
  if (!(opts.tol >= 0.0)) throw ValidationError("tol must be >= 0");
  if (opts.max_iter < 1) throw ValidationError("max_iter must be >= 1");

  const SupportSet support = build_support(data);
  const ArmSlice arm[2] = {make_slice(data, support, 0),
                           make_slice(data, support, 1)};

  SmleFit fit;
  fit.beta = {0.0, 0.0, 0.0, 0.0};
  fit.sigma = 0.1;
  fit.p0.assign(support.s0.size(), 1.0 / double(support.s0.size()));
  fit.p1.assign(support.s1.size(), 1.0 / double(support.s1.size()));

  // Reusable workspaces sized to each arm's support.
  Eigen::ArrayXd lp[2], lw[2], sphi[2];
  for (int z = 0; z < 2; ++z) {
    lp[z].resize(arm[z].s.size());
    lw[z].resize(arm[z].s.size());
  }

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    const double inv2s2 = 1.0 / (2.0 * fit.sigma * fit.sigma);
    double a[2], b[2];          // per-arm intercept/slope of the current state
    double sw[2], ss[2], sss[2], sy[2], ssy[2], syy[2];

    for (int z = 0; z < 2; ++z) {
      const auto& p = fit.mass(z);
      for (Eigen::Index k = 0; k < lp[z].size(); ++k) {
        lp[z](k) = p[static_cast<std::size_t>(k)] > 0.0
                       ? std::log(p[static_cast<std::size_t>(k)])
                       : -std::numeric_limits<double>::infinity();
      }
      const double az = fit.beta[0] + fit.beta[1] * z;
      const double bz = fit.beta[2] + fit.beta[3] * z;
      const Eigen::ArrayXd mu = az + bz * arm[z].s;

      sphi[z] = Eigen::ArrayXd::Zero(arm[z].s.size());
      sw[z] = arm[z].m_w;
      ss[z] = arm[z].m_s;
      sss[z] = arm[z].m_ss;
      sy[z] = arm[z].m_y;
      ssy[z] = arm[z].m_sy;
      syy[z] = arm[z].m_yy;

      const Eigen::Index m = arm[z].s.size();
      const double* sdat = arm[z].s.data();
      for (const double y : arm[z].y_missing) {
        // Support points whose normal weight is below e^-60 of the best
        // cannot move any double-precision sum; restrict the update to the
        // window around c = (y - a)/b where the rest can matter. Masses are
        // bounded below by 1/n (every support point carries an observed
        // record), so the prior ratio cannot rescue a point outside it.
        Eigen::Index lo = 0, len = m;
        if (bz != 0.0 && std::isfinite(bz)) {
          const double c = (y - az) / bz;
          const double* it = std::lower_bound(sdat, sdat + m, c);
          double min_r2 = std::numeric_limits<double>::infinity();
          if (it != sdat + m) min_r2 = (c - *it) * (c - *it);
          if (it != sdat) min_r2 = std::min(min_r2, (c - *(it - 1)) * (c - *(it - 1)));
          const double w = std::sqrt(min_r2 + 60.0 / (bz * bz * inv2s2));
          lo = std::lower_bound(sdat, sdat + m, c - w) - sdat;
          len = (std::upper_bound(sdat + lo, sdat + m, c + w) - sdat) - lo;
        }

        auto lwseg = lw[z].segment(lo, len);
        lwseg = lp[z].segment(lo, len) -
                (y - mu.segment(lo, len)).square() * inv2s2;
        const double best = lwseg.maxCoeff();
        if (!std::isfinite(best)) {
          throw NumericalError("posterior mass vanished for a missing-surrogate record");
        }
        lwseg = (lwseg - best).exp();
        const double tot = lwseg.sum();
        lwseg /= tot;

        sphi[z].segment(lo, len) += lwseg;
        const double t1 = (lwseg * arm[z].s.segment(lo, len)).sum();
        const double t2 = (lwseg * arm[z].s2.segment(lo, len)).sum();
        sw[z] += 1.0;
        ss[z] += t1;
        sss[z] += t2;
        sy[z] += y;
        ssy[z] += y * t1;
        syy[z] += y * y;
      }

      // Weighted simple regression of y on s within the arm.
      const double det = sw[z] * sss[z] - ss[z] * ss[z];
      if (!(det > 1e-14 * sw[z] * sss[z])) {
        throw SingularDesignError("surrogate support is numerically degenerate");
      }
      a[z] = (sss[z] * sy[z] - ss[z] * ssy[z]) / det;
      b[z] = (sw[z] * ssy[z] - ss[z] * sy[z]) / det;
    }

    SmleFit next = fit;
    next.beta = {a[0], a[1] - a[0], b[0], b[1] - b[0]};

    double rss = 0.0;
    for (int z = 0; z < 2; ++z) {
      rss += syy[z] - 2.0 * a[z] * sy[z] - 2.0 * b[z] * ssy[z] + a[z] * a[z] * sw[z] +
             2.0 * a[z] * b[z] * ss[z] + b[z] * b[z] * sss[z];
    }
    next.sigma = std::sqrt(std::max(rss, 0.0) / (sw[0] + sw[1]));
    if (next.sigma < kSigmaFloor) {
      next.sigma = kSigmaFloor;
      next.sigma_floored = true;
    }

    for (int z = 0; z < 2; ++z) {
      const Eigen::ArrayXd num = arm[z].obs_count + sphi[z];
      const double tot = num.sum();
      auto& mass = z == 0 ? next.p0 : next.p1;
      for (Eigen::Index k = 0; k < num.size(); ++k) {
        mass[static_cast<std::size_t>(k)] = num(k) / tot;
      }
    }

    double delta = std::abs(next.sigma - fit.sigma);
    for (int j = 0; j < 4; ++j) {
      delta = std::max(delta, std::abs(next.beta[j] - fit.beta[j]));
    }
    for (int z = 0; z < 2; ++z) {
      const auto& cur = fit.mass(z);
      const auto& nxt = next.mass(z);
      for (std::size_t k = 0; k < cur.size(); ++k) {
        delta = std::max(delta, std::abs(nxt[k] - cur[k]));
      }
    }

    fit = std::move(next);
    fit.iterations = iter;
    if (opts.observer) opts.observer(fit);
    if (delta < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

double observed_data_loglik(const SmleFit& fit, const TrialData& data,
                            const SupportSet& support) {
  const double inv2s2 = 1.0 / (2.0 * fit.sigma * fit.sigma);
  const double log_norm = -0.5 * std::log(2.0 * M_PI * fit.sigma * fit.sigma);

  double ll = 0.0;
  for (const auto& r : data.records) {
    const auto& sup = support.arm(r.z);
    const auto& p = fit.mass(r.z);
    const double a = fit.beta[0] + fit.beta[1] * r.z;
    const double b = fit.beta[2] + fit.beta[3] * r.z;
    if (r.observed()) {
      const auto k = support_index(sup, *r.s);
      const double resid = r.y - (a + b * *r.s);
      ll += log_norm - resid * resid * inv2s2 +
            (p[k] > 0.0 ? std::log(p[k]) : -std::numeric_limits<double>::infinity());
    } else {
      double best = -std::numeric_limits<double>::infinity();
      std::vector<double> terms(sup.size());
      for (std::size_t k = 0; k < sup.size(); ++k) {
        const double resid = r.y - (a + b * sup[k]);
        terms[k] = p[k] > 0.0 ? std::log(p[k]) - resid * resid * inv2s2
                              : -std::numeric_limits<double>::infinity();
        best = std::max(best, terms[k]);
      }
      double sum = 0.0;
      for (const double t : terms) sum += std::exp(t - best);
      ll += log_norm + best + std::log(sum);
    }
  }
  return ll;
}

ArmMeans support_means(const SmleFit& fit, const SupportSet& support) {
  ArmMeans means;
  means.alpha0 = 0.0;
  means.alpha1 = 0.0;
  for (std::size_t k = 0; k < support.s0.size(); ++k) {
    means.alpha0 += fit.p0[k] * support.s0[k];
  }
  for (std::size_t k = 0; k < support.s1.size(); ++k) {
    means.alpha1 += fit.p1[k] * support.s1[k];
  }
  return means;
}

SmleEstimate estimate_smle(const TrialData& data, const EmOptions& opts) {
  SmleEstimate out;
  out.support = build_support(data);
  out.fit = em_fit(data, opts);
  const LinearFit lin{out.fit.beta, out.fit.sigma};
  out.estimands = pte_from_components(lin, support_means(out.fit, out.support));
  return out;
}

}  // namespace pte
