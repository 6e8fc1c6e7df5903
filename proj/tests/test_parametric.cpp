#include "pte/parametric.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pte/errors.hpp"
#include "pte/ipw.hpp"
#include "pte/rng.hpp"
#include "pte/trial_data.hpp"

using pte::ArmMeans;
using pte::LinearFit;
using pte::RegObs;
using pte::RngStream;
using pte::StreamId;

namespace {

// Independent oracle: solve the 4x4 normal equations in long double with
// full-pivot Gaussian elimination. Deliberately a different algorithm and
// precision than the library path.
std::array<double, 4> normal_equation_oracle(const std::vector<RegObs>& obs,
                                             const std::vector<double>& w) {
  long double A[4][4] = {};
  long double b[4] = {};
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const long double x[4] = {1.0L, (long double)obs[i].z, (long double)obs[i].s,
                              (long double)obs[i].s * obs[i].z};
    const long double wi = w.empty() ? 1.0L : (long double)w[i];
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) A[r][c] += wi * x[r] * x[c];
      b[r] += wi * x[r] * obs[i].y;
    }
  }
  int perm[4] = {0, 1, 2, 3};
  for (int k = 0; k < 4; ++k) {
    int piv = k;
    for (int r = k + 1; r < 4; ++r) {
      if (std::fabs((double)A[r][k]) > std::fabs((double)A[piv][k])) piv = r;
    }
    std::swap(A[k], A[piv]);
    std::swap(b[k], b[piv]);
    std::swap(perm[k], perm[piv]);
    for (int r = k + 1; r < 4; ++r) {
      const long double f = A[r][k] / A[k][k];
      for (int c = k; c < 4; ++c) A[r][c] -= f * A[k][c];
      b[r] -= f * b[k];
    }
  }
  long double x[4];
  for (int k = 3; k >= 0; --k) {
    long double acc = b[k];
    for (int c = k + 1; c < 4; ++c) acc -= A[k][c] * x[c];
    x[k] = acc / A[k][k];
  }
  (void)perm;
  return {(double)x[0], (double)x[1], (double)x[2], (double)x[3]};
}

std::vector<RegObs> random_obs(int n, std::uint64_t seed) {
  RngStream srng(seed, StreamId::Surrogate);
  RngStream erng(seed, StreamId::Noise);
  std::vector<RegObs> obs;
  for (int i = 0; i < n; ++i) {
    const int z = i % 2;
    const double s = z == 1 ? srng.normal(6.0, 2.0) : srng.normal(5.0, 1.0);
    const double y = 2.0 + z + 5.0 * s + z * s + erng.normal();
    obs.push_back({y, s, z});
  }
  return obs;
}

}  // namespace

TEST_CASE("exactly determined system is reproduced with zero residual") {
  // y built from beta = (1, 2, 3, 4) on the four cell corners.
  const std::vector<RegObs> obs = {
      {1.0, 0.0, 0}, {4.0, 1.0, 0}, {3.0, 0.0, 1}, {10.0, 1.0, 1}};
  const LinearFit fit = pte::fit_wls(obs);
  CHECK(fit.beta[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.beta[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.beta[2] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.beta[3] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(fit.sigma >= 0.0);
  CHECK(fit.sigma < 1e-12);
}

TEST_CASE("coefficients match a long-double normal-equation solve") {
  const auto obs = random_obs(101, 17);

  SUBCASE("unit weights") {
    const auto expect = normal_equation_oracle(obs, {});
    const LinearFit fit = pte::fit_wls(obs);
    for (int j = 0; j < 4; ++j) {
      CHECK(fit.beta[j] == doctest::Approx(expect[j]).epsilon(1e-10));
    }
  }

  SUBCASE("varying weights") {
    RngStream wrng(99, StreamId::Bootstrap);
    std::vector<double> w;
    for (std::size_t i = 0; i < obs.size(); ++i) w.push_back(0.5 + 3.0 * wrng.uniform01());
    const auto expect = normal_equation_oracle(obs, w);
    const LinearFit fit = pte::fit_wls(obs, w);
    for (int j = 0; j < 4; ++j) {
      CHECK(fit.beta[j] == doctest::Approx(expect[j]).epsilon(1e-10));
    }
  }
}

TEST_CASE("integer weights behave exactly like duplicated rows") {
  const auto obs = random_obs(40, 21);
  std::vector<double> w(obs.size());
  RngStream wrng(5, StreamId::Bootstrap);
  std::vector<RegObs> dup;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const int k = 1 + int(wrng.uniform_below(3));
    w[i] = k;
    for (int c = 0; c < k; ++c) dup.push_back(obs[i]);
  }
  const LinearFit a = pte::fit_wls(obs, w);
  const LinearFit b = pte::fit_wls(dup);
  for (int j = 0; j < 4; ++j) {
    CHECK(a.beta[j] == doctest::Approx(b.beta[j]).epsilon(1e-12));
  }
  CHECK(a.sigma == doctest::Approx(b.sigma).epsilon(1e-12));
}

TEST_CASE("rank-deficient designs are rejected") {
  // Surrogate constant within and across arms: s column is collinear with
  // the intercept.
  std::vector<RegObs> obs;
  for (int i = 0; i < 12; ++i) obs.push_back({1.0 * i, 2.5, i % 2});
  CHECK_THROWS_AS(pte::fit_wls(obs), pte::SingularDesignError);

  // Fewer rows than columns.
  const std::vector<RegObs> tiny = {{1, 1, 0}, {2, 2, 1}, {3, 3, 0}};
  CHECK_THROWS_AS(pte::fit_wls(tiny), pte::SingularDesignError);

  // Bad weights.
  const auto ok = random_obs(10, 3);
  CHECK_THROWS_AS(pte::fit_wls(ok, std::vector<double>{1, 1}), pte::ValidationError);
  std::vector<double> neg(ok.size(), 1.0);
  neg[2] = -0.5;
  CHECK_THROWS_AS(pte::fit_wls(ok, neg), pte::ValidationError);
}

TEST_CASE("effect decomposition from fitted components") {
  LinearFit fit;
  fit.beta = {2.0, 1.0, 5.0, 1.0};
  const ArmMeans means{5.0, 6.0};
  const auto est = pte::pte_from_components(fit, means);
  // delta = 1 + (5+1)*6 - 5*5 = 12, delta_s = 1 + 1*5 = 6
  CHECK(est.delta == doctest::Approx(12.0).epsilon(1e-15));
  CHECK(est.delta_s == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(est.r_s == doctest::Approx(0.5).epsilon(1e-15));

  // Zero overall effect has no defined proportion.
  LinearFit null_fit;
  null_fit.beta = {2.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(pte::pte_from_components(null_fit, means), pte::UndefinedPteError);
}

TEST_CASE("pipeline equals manual fit plus surrogate means") {
  const auto obs = random_obs(80, 31);
  std::vector<pte::PatientRecord> recs;
  double sum[2] = {0, 0};
  int cnt[2] = {0, 0};
  for (const auto& o : obs) {
    recs.push_back({o.y, o.s, o.z});
    sum[o.z] += o.s;
    ++cnt[o.z];
  }
  const auto data = pte::TrialData::from_records(std::move(recs));
  const auto est = pte::estimate_parametric(data);

  const LinearFit fit = pte::fit_wls(obs);
  const ArmMeans means{sum[0] / cnt[0], sum[1] / cnt[1]};
  const auto manual = pte::pte_from_components(fit, means);
  CHECK(est.delta == doctest::Approx(manual.delta).epsilon(1e-14));
  CHECK(est.delta_s == doctest::Approx(manual.delta_s).epsilon(1e-14));
  CHECK(est.r_s == doctest::Approx(manual.r_s).epsilon(1e-14));
}

TEST_CASE("records with missing surrogate are excluded from the fit") {
  const auto obs = random_obs(60, 41);
  std::vector<pte::PatientRecord> full, kept;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (i % 4 == 0) {
      full.push_back({obs[i].y, std::nullopt, obs[i].z});
    } else {
      full.push_back({obs[i].y, obs[i].s, obs[i].z});
      kept.push_back({obs[i].y, obs[i].s, obs[i].z});
    }
  }
  const auto with_missing = pte::TrialData::from_records(std::move(full));
  const auto complete_only = pte::TrialData::from_records(std::move(kept));
  const auto a = pte::estimate_parametric(with_missing);
  const auto b = pte::estimate_parametric(complete_only);
  CHECK(a.r_s == b.r_s);
  CHECK(a.delta == b.delta);
}

TEST_CASE("unit weight set reproduces the unweighted pipeline bit for bit") {
  const auto obs = random_obs(50, 53);
  std::vector<pte::PatientRecord> recs;
  for (const auto& o : obs) recs.push_back({o.y, o.s, o.z});
  const auto data = pte::TrialData::from_records(std::move(recs));

  pte::WeightSet ws;
  ws.prob.assign(data.records.size(), 1.0);
  ws.weight.assign(data.records.size(), 1.0);
  const auto weighted = pte::estimate_parametric(data, &ws);
  const auto plain = pte::estimate_parametric(data);
  CHECK(weighted.delta == plain.delta);
  CHECK(weighted.delta_s == plain.delta_s);
  CHECK(weighted.r_s == plain.r_s);
}
