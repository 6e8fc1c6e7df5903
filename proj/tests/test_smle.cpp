#include "pte/smle.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "pte/errors.hpp"
#include "pte/rng.hpp"
#include "pte/trial_data.hpp"

using pte::EmOptions;
using pte::PatientRecord;
using pte::PhiMatrix;
using pte::RngStream;
using pte::SmleFit;
using pte::StreamId;
using pte::SupportSet;
using pte::TrialData;

namespace {

TrialData em_sample(int n, std::uint64_t seed, double miss_frac) {
  RngStream srng(seed, StreamId::Surrogate);
  RngStream erng(seed, StreamId::Noise);
  RngStream mrng(seed, StreamId::Missingness);
  std::vector<PatientRecord> recs;
  for (int i = 0; i < n; ++i) {
    const int z = i % 2;
    const double s = z == 1 ? srng.normal(6.0, 2.0) : srng.normal(5.0, 1.0);
    const double y = 2.0 + z + 5.0 * s + z * s + erng.normal();
    if (mrng.bernoulli(miss_frac)) {
      recs.push_back({y, std::nullopt, z});
    } else {
      recs.push_back({y, s, z});
    }
  }
  return TrialData::from_records(std::move(recs));
}

}  // namespace

TEST_CASE("support is the sorted distinct observed values per arm") {
  std::vector<PatientRecord> recs;
  recs.push_back({1.0, 5.0, 0});
  recs.push_back({1.0, 3.0, 0});
  recs.push_back({1.0, 5.0, 0});
  recs.push_back({1.0, std::nullopt, 0});
  recs.push_back({1.0, 7.0, 1});
  recs.push_back({1.0, 6.5, 1});
  const auto data = TrialData::from_records(std::move(recs));
  const auto sup = pte::build_support(data);
  CHECK(sup.s0 == std::vector<double>{3.0, 5.0});
  CHECK(sup.s1 == std::vector<double>{6.5, 7.0});

  // One distinct value in an arm is not enough.
  std::vector<PatientRecord> degen;
  degen.push_back({1.0, 5.0, 0});
  degen.push_back({1.0, 5.0, 0});
  degen.push_back({1.0, 6.5, 1});
  degen.push_back({1.0, 7.0, 1});
  CHECK_THROWS_AS(pte::build_support(TrialData::from_records(std::move(degen))),
                  pte::ValidationError);
}

TEST_CASE("posterior rows at hand-computed values") {
  std::vector<PatientRecord> recs;
  recs.push_back({0.0, 0.0, 0});
  recs.push_back({1.0, 1.0, 0});
  recs.push_back({1.0, std::nullopt, 0});  // the interesting row
  recs.push_back({5.0, 5.0, 1});
  recs.push_back({6.0, 6.0, 1});
  const auto data = TrialData::from_records(std::move(recs));
  const auto sup = pte::build_support(data);

  SmleFit params;
  params.beta = {0.0, 0.0, 1.0, 0.0};  // mu equals s in arm 0
  params.sigma = 1.0;
  params.p0 = {0.5, 0.5};
  params.p1 = {0.5, 0.5};

  const PhiMatrix phi = pte::e_step(params, data, sup);
  REQUIRE(phi.rows.size() == 5);

  // Observed records are one-hot at their support index.
  CHECK(phi.rows[0] == std::vector<double>{1.0, 0.0});
  CHECK(phi.rows[1] == std::vector<double>{0.0, 1.0});

  // Missing row: weights proportional to exp(-(1-mu_k)^2/2) * 0.5 with
  // mu = (0, 1), so phi = (e^-1/2, 1)/(e^-1/2 + 1).
  const double lo = std::exp(-0.5) / (1.0 + std::exp(-0.5));
  CHECK(phi.rows[2][0] == doctest::Approx(lo).epsilon(1e-14));
  CHECK(phi.rows[2][1] == doctest::Approx(1.0 - lo).epsilon(1e-14));
  CHECK(phi.rows[2][0] + phi.rows[2][1] == doctest::Approx(1.0).epsilon(1e-15));

  // Zero prior mass stays zero posterior mass.
  params.p0 = {1.0, 0.0};
  const PhiMatrix phi2 = pte::e_step(params, data, sup);
  CHECK(phi2.rows[2][1] == 0.0);
  CHECK(phi2.rows[2][0] == 1.0);
}

TEST_CASE("maximization matches closed-form weighted regression per arm") {
  const auto data = em_sample(80, 3, 0.3);
  const auto sup = pte::build_support(data);

  SmleFit params;
  params.beta = {1.0, 0.5, 4.0, 0.5};
  params.sigma = 2.0;
  params.p0.assign(sup.s0.size(), 1.0 / double(sup.s0.size()));
  params.p1.assign(sup.s1.size(), 1.0 / double(sup.s1.size()));

  const PhiMatrix phi = pte::e_step(params, data, sup);
  const auto ms = pte::m_step(phi, data, sup);

  // Independent solve: per-arm weighted simple regression over the
  // support-expanded rows, in long double.
  long double SW[2] = {}, SS[2] = {}, SSS[2] = {}, SY[2] = {}, SSY[2] = {}, SYY[2] = {};
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    const auto& s = sup.arm(r.z);
    for (std::size_t k = 0; k < s.size(); ++k) {
      const long double w = phi.rows[i][k];
      SW[r.z] += w;
      SS[r.z] += w * s[k];
      SSS[r.z] += w * s[k] * s[k];
      SY[r.z] += w * r.y;
      SSY[r.z] += w * s[k] * r.y;
      SYY[r.z] += w * r.y * r.y;
    }
  }
  long double a[2], b[2];
  for (int z = 0; z < 2; ++z) {
    const long double det = SW[z] * SSS[z] - SS[z] * SS[z];
    a[z] = (SSS[z] * SY[z] - SS[z] * SSY[z]) / det;
    b[z] = (SW[z] * SSY[z] - SS[z] * SY[z]) / det;
  }
  CHECK(ms.fit.beta[0] == doctest::Approx(double(a[0])).epsilon(1e-10));
  CHECK(ms.fit.beta[1] == doctest::Approx(double(a[1] - a[0])).epsilon(1e-10));
  CHECK(ms.fit.beta[2] == doctest::Approx(double(b[0])).epsilon(1e-10));
  CHECK(ms.fit.beta[3] == doctest::Approx(double(b[1] - b[0])).epsilon(1e-10));

  long double rss = 0.0;
  for (int z = 0; z < 2; ++z) {
    rss += SYY[z] - 2 * a[z] * SY[z] - 2 * b[z] * SSY[z] + a[z] * a[z] * SW[z] +
           2 * a[z] * b[z] * SS[z] + b[z] * b[z] * SSS[z];
  }
  CHECK(ms.fit.sigma ==
        doctest::Approx(double(sqrtl(rss / (SW[0] + SW[1])))).epsilon(1e-9));

  // Mass update is the literal column-sum ratio.
  for (int z = 0; z < 2; ++z) {
    const auto& mass = z == 0 ? ms.p0 : ms.p1;
    const auto& s = sup.arm(z);
    long double tot = 0.0;
    std::vector<long double> col(s.size(), 0.0L);
    for (std::size_t i = 0; i < data.records.size(); ++i) {
      if (data.records[i].z != z) continue;
      for (std::size_t k = 0; k < s.size(); ++k) {
        col[k] += phi.rows[i][k];
        tot += phi.rows[i][k];
      }
    }
    double mass_sum = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      CHECK(mass[k] == doctest::Approx(double(col[k] / tot)).epsilon(1e-12));
      mass_sum += mass[k];
    }
    CHECK(mass_sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("fixed point of alternating steps equals the fused loop") {
  const auto data = em_sample(60, 9, 0.35);
  const auto sup = pte::build_support(data);

  // Three fused iterations with tol 0 never converge early...
  EmOptions opts;
  opts.tol = 0.0;
  opts.max_iter = 3;
  const SmleFit fused = pte::em_fit(data, opts);
  CHECK(fused.iterations == 3);
  CHECK_FALSE(fused.converged);

  // ...and must agree with three manual expectation/maximization rounds.
  SmleFit state;
  state.beta = {0, 0, 0, 0};
  state.sigma = 0.1;
  state.p0.assign(sup.s0.size(), 1.0 / double(sup.s0.size()));
  state.p1.assign(sup.s1.size(), 1.0 / double(sup.s1.size()));
  for (int t = 0; t < 3; ++t) {
    const PhiMatrix phi = pte::e_step(state, data, sup);
    const auto ms = pte::m_step(phi, data, sup);
    state.beta = ms.fit.beta;
    state.sigma = ms.fit.sigma;
    state.p0 = ms.p0;
    state.p1 = ms.p1;
  }
  for (int j = 0; j < 4; ++j) {
    CHECK(fused.beta[j] == doctest::Approx(state.beta[j]).epsilon(1e-8));
  }
  CHECK(fused.sigma == doctest::Approx(state.sigma).epsilon(1e-8));
  for (std::size_t k = 0; k < state.p0.size(); ++k) {
    CHECK(fused.p0[k] == doctest::Approx(state.p0[k]).epsilon(1e-8).scale(1.0));
  }
  for (std::size_t k = 0; k < state.p1.size(); ++k) {
    CHECK(fused.p1[k] == doctest::Approx(state.p1[k]).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("observed-data log likelihood never decreases across iterations") {
  const auto data = em_sample(150, 21, 0.4);
  const auto sup = pte::build_support(data);

  std::vector<double> ll;
  EmOptions opts;
  opts.observer = [&](const SmleFit& state) {
    ll.push_back(pte::observed_data_loglik(state, data, sup));
  };
  const SmleFit fit = pte::em_fit(data, opts);
  CHECK(fit.converged);
  REQUIRE(ll.size() >= 2);
  for (std::size_t t = 1; t < ll.size(); ++t) {
    CHECK(ll[t] >= ll[t - 1] - 1e-8);
  }
}

TEST_CASE("fully observed data collapses to the one-step parametric fit") {
  const auto data = em_sample(100, 33, 0.0);
  const SmleFit fit = pte::em_fit(data);
  CHECK(fit.converged);
  // One-hot posteriors make the first m-step land on the final parameters;
  // the second iteration only confirms nothing moves.
  CHECK(fit.iterations == 2);

  std::vector<pte::RegObs> obs;
  for (const auto& r : data.records) obs.push_back({r.y, *r.s, r.z});
  const auto wls = pte::fit_wls(obs);
  for (int j = 0; j < 4; ++j) {
    CHECK(fit.beta[j] == doctest::Approx(wls.beta[j]).epsilon(1e-10));
  }
  CHECK(fit.sigma == doctest::Approx(wls.sigma).epsilon(1e-10));

  // Masses are the empirical frequencies, so the support means are the
  // sample means and the whole estimate matches the parametric pipeline.
  const auto smle = pte::estimate_smle(data);
  const auto par = pte::estimate_parametric(data);
  CHECK(smle.estimands.delta == doctest::Approx(par.delta).epsilon(1e-10));
  CHECK(smle.estimands.delta_s == doctest::Approx(par.delta_s).epsilon(1e-10));
  CHECK(smle.estimands.r_s == doctest::Approx(par.r_s).epsilon(1e-10));
}

TEST_CASE("noise-free outcomes hit the sigma floor and are flagged") {
  std::vector<PatientRecord> recs;
  RngStream srng(5, StreamId::Surrogate);
  for (int i = 0; i < 40; ++i) {
    const int z = i % 2;
    const double s = srng.normal(5.0 + z, 1.0);
    recs.push_back({2.0 + z + 5.0 * s, s, z});  // exact plane, sigma = 0
  }
  const auto data = TrialData::from_records(std::move(recs));
  const SmleFit fit = pte::em_fit(data);
  CHECK(fit.sigma == 1e-6);
  CHECK(fit.sigma_floored);
}

TEST_CASE("estimation is deterministic") {
  const auto data = em_sample(120, 55, 0.35);
  const auto a = pte::estimate_smle(data);
  const auto b = pte::estimate_smle(data);
  CHECK(a.estimands.r_s == b.estimands.r_s);
  CHECK(a.fit.sigma == b.fit.sigma);
  CHECK(a.fit.iterations == b.fit.iterations);
}

TEST_CASE("mismatched shapes are rejected") {
  const auto data = em_sample(40, 77, 0.3);
  const auto sup = pte::build_support(data);
  SmleFit params;
  params.p0.assign(sup.s0.size() + 1, 0.1);
  params.p1.assign(sup.s1.size(), 1.0 / double(sup.s1.size()));
  CHECK_THROWS_AS(pte::e_step(params, data, sup), pte::ValidationError);

  PhiMatrix phi;
  phi.rows.resize(3);
  CHECK_THROWS_AS(pte::m_step(phi, data, sup), pte::ValidationError);
}
