#include "pte/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "pte/errors.hpp"
#include "pte/parallel.hpp"

namespace pte {

TrialData stratified_resample(const TrialData& data, RngStream& rng) {
  std::vector<std::size_t> arm_idx[2];
  arm_idx[0].reserve(static_cast<std::size_t>(data.n0));
  arm_idx[1].reserve(static_cast<std::size_t>(data.n1));
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    arm_idx[data.records[i].z].push_back(i);
  }

  std::vector<PatientRecord> recs;
  recs.reserve(data.records.size());
  for (int z = 0; z < 2; ++z) {
    const auto& idx = arm_idx[z];
    for (std::size_t k = 0; k < idx.size(); ++k) {
      recs.push_back(data.records[idx[rng.uniform_below(idx.size())]]);
    }
  }
  return TrialData::from_records(std::move(recs));
}

double quantile_type7(std::span<const double> values, double p) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto i = static_cast<std::size_t>(h);
  if (i + 1 >= x.size()) return x.back();
  return x[i] + (h - static_cast<double>(i)) * (x[i + 1] - x[i]);
}

namespace {

ComponentSummary summarize(double point, const std::vector<double>& reps) {
  double mean = 0.0;
  for (const double v : reps) mean += v;
  mean /= static_cast<double>(reps.size());
  double ss = 0.0;
  for (const double v : reps) ss += (v - mean) * (v - mean);

  ComponentSummary out;
  out.se = std::sqrt(ss / (static_cast<double>(reps.size()) - 1.0));
  out.wald = {point - 1.96 * out.se, point + 1.96 * out.se};
  out.quantile = {quantile_type7(reps, 0.025), quantile_type7(reps, 0.975)};
  return out;
}

}  // namespace

BootstrapResult bootstrap_inference(const TrialData& data, const PteEstimator& estimator,
                                    int d, std::uint64_t seed, int threads,
                                    const EstimandSet* point_hint) {
  if (d < 1) throw ValidationError("bootstrap needs at least 1 replicate");

  BootstrapResult out;
  out.d_requested = d;
  out.point = point_hint != nullptr ? *point_hint : estimator(data);

  std::vector<std::optional<EstimandSet>> slots(static_cast<std::size_t>(d));
  std::vector<std::string> fail_kind(static_cast<std::size_t>(d));
  parallel_for(d, threads, [&](int b) {
    RngStream rng(seed, StreamId::Bootstrap, static_cast<std::uint64_t>(b));
    const TrialData resample = stratified_resample(data, rng);
    try {
      slots[static_cast<std::size_t>(b)] = estimator(resample);
    } catch (const Error& e) {
      fail_kind[static_cast<std::size_t>(b)] = e.kind();
    }
  });

  std::vector<double> delta, delta_s, r_s;
  delta.reserve(slots.size());
  delta_s.reserve(slots.size());
  r_s.reserve(slots.size());
  for (std::size_t b = 0; b < slots.size(); ++b) {
    if (slots[b]) {
      delta.push_back(slots[b]->delta);
      delta_s.push_back(slots[b]->delta_s);
      r_s.push_back(slots[b]->r_s);
    } else {
      ++out.failures[fail_kind[b]];
    }
  }
  out.d_effective = static_cast<int>(r_s.size());

  if (out.d_effective < 2 || double(out.d_effective) < 0.9 * double(d)) {
    std::string dominant = "none";
    int most = 0;
    for (const auto& [kind, count] : out.failures) {
      if (count > most) {
        most = count;
        dominant = kind;
      }
    }
    throw InferenceUnreliableError(
        "bootstrap kept " + std::to_string(out.d_effective) + " of " +
        std::to_string(d) + " replicates (below the 90% threshold); dominant failure: " +
        dominant + " (" + std::to_string(most) + ")");
  }

  out.delta = summarize(out.point.delta, delta);
  out.delta_s = summarize(out.point.delta_s, delta_s);
  out.r_s = summarize(out.point.r_s, r_s);
  return out;
}

}  // namespace pte
