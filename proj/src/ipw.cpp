#include "pte/ipw.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "pte/errors.hpp"
#include "wls_core.hpp"

namespace pte {

namespace {

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

}  // namespace

WeightFormula WeightFormula::parse(const std::string& text) {
  WeightFormula f;
  std::stringstream ss(text);
  std::string term;
  bool any = false;
  while (std::getline(ss, term, ',')) {
    // strip blanks
    std::string t;
    for (char c : term) {
      if (!std::isspace(static_cast<unsigned char>(c))) t += c;
    }
    if (t.empty()) continue;
    any = true;
    bool dup = false;
    if (t == "y") {
      dup = f.has_y;
      f.has_y = true;
    } else if (t == "z") {
      dup = f.has_z;
      f.has_z = true;
    } else if (t == "y:z" || t == "z:y") {
      dup = f.has_yz;
      f.has_yz = true;
    } else {
      throw ValidationError("unknown weight-model term '" + t +
                            "' (expected y, z, or y:z)");
    }
    if (dup) throw ValidationError("duplicate weight-model term '" + t + "'");
  }
  if (!any) throw ValidationError("weight-model formula is empty");
  return f;
}

std::string WeightFormula::str() const {
  std::string out;
  const auto add = [&out](const char* t) {
    if (!out.empty()) out += ',';
    out += t;
  };
  if (has_y) add("y");
  if (has_z) add("z");
  if (has_yz) add("y:z");
  return out;
}

double MissingnessModel::prob(const PatientRecord& rec) const {
  if (kind == MissModelKind::EmpiricalByArm) {
    return arm_prob[static_cast<std::size_t>(rec.z)];
  }
  double eta = coef[0];
  std::size_t j = 1;
  if (formula.has_y) eta += coef[j++] * rec.y;
  if (formula.has_z) eta += coef[j++] * rec.z;
  if (formula.has_yz) eta += coef[j++] * rec.y * rec.z;
  return sigmoid(eta);
}

MissingnessModel fit_missingness_empirical(const TrialData& data) {
  int obs[2] = {0, 0};
  int tot[2] = {0, 0};
  for (const auto& r : data.records) {
    ++tot[r.z];
    if (r.observed()) ++obs[r.z];
  }
  MissingnessModel m;
  m.kind = MissModelKind::EmpiricalByArm;
  m.arm_prob = {double(obs[0]) / tot[0], double(obs[1]) / tot[1]};
  return m;
}

MissingnessModel fit_missingness_logistic(const TrialData& data,
                                          const WeightFormula& formula) {
  const auto n = static_cast<Eigen::Index>(data.records.size());
  const int p = formula.dim();

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd o(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = data.records[static_cast<std::size_t>(i)];
    int j = 0;
    X(i, j++) = 1.0;
    if (formula.has_y) X(i, j++) = r.y;
    if (formula.has_z) X(i, j++) = r.z;
    if (formula.has_yz) X(i, j++) = r.y * r.z;
    o(i) = r.observed() ? 1.0 : 0.0;
  }

  // Rank check up front so collinear formulas fail loudly.
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const auto& sv = svd.singularValues();
    if (n < p || !(sv(0) > 0.0) || sv(sv.size() - 1) < detail::kRankTol * sv(0)) {
      throw SingularDesignError("observation-model design is rank deficient");
    }
  }

  const auto loglik = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = X * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ll += o(i) * eta(i) - softplus(eta(i));
    return ll;
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double ll = loglik(beta);
  bool converged = false;
  for (int iter = 0; iter < 100 && !converged; ++iter) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = sigmoid(eta(i));
      w(i) = mu(i) * (1.0 - mu(i));
    }
    const Eigen::VectorXd grad = X.transpose() * (o - mu);
    const Eigen::MatrixXd hess = X.transpose() * w.asDiagonal() * X;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    // Under complete separation the curvature vanishes; stop pushing once
    // the update degenerates and let the separation check below report it.
    if (!step.allFinite()) break;

    // Halve the step until the log-likelihood stops decreasing.
    double lambda = 1.0;
    Eigen::VectorXd cand = beta + step;
    double ll_cand = loglik(cand);
    while (ll_cand < ll - 1e-12 && lambda > 1e-8) {
      lambda *= 0.5;
      cand = beta + lambda * step;
      ll_cand = loglik(cand);
    }
    converged = (lambda * step).cwiseAbs().maxCoeff() < 1e-10;
    beta = cand;
    ll = ll_cand;
  }

  MissingnessModel m;
  m.kind = MissModelKind::Logistic;
  m.formula = formula;
  m.coef.assign(beta.data(), beta.data() + p);
  m.converged = converged;

  // Complete separation: every fitted probability in one response class is
  // numerically at its boundary.
  const Eigen::VectorXd eta = X * beta;
  bool all_obs_one = true, all_mis_zero = true;
  bool saw_obs = false, saw_mis = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = sigmoid(eta(i));
    if (o(i) == 1.0) {
      saw_obs = true;
      all_obs_one &= mu > 1.0 - 1e-10;
    } else {
      saw_mis = true;
      all_mis_zero &= mu < 1e-10;
    }
  }
  m.separation = (saw_obs && all_obs_one) || (saw_mis && all_mis_zero);
  return m;
}

WeightSet weights_from_model(const MissingnessModel& model, const TrialData& data,
                             std::optional<double> cap) {
  if (cap && !(*cap > 0.0)) throw ValidationError("weight cap must be > 0");

  WeightSet ws;
  ws.cap = cap;
  ws.prob.reserve(data.records.size());
  ws.weight.reserve(data.records.size());
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    const double p = model.prob(r);
    ws.prob.push_back(p);
    if (!r.observed()) {
      ws.weight.push_back(0.0);
      continue;
    }
    if (p <= 1e-12) {
      throw NearZeroProbabilityError(
          "record " + std::to_string(i + 1) +
          " observed with near-zero fitted observation probability");
    }
    double w = 1.0 / p;
    if (cap && w > *cap) w = *cap;
    ws.weight.push_back(w);
  }
  return ws;
}

}  // namespace pte
