#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pte {

// One patient: outcome y, surrogate s (possibly missing), arm z in {0,1}.
struct PatientRecord {
  double y = 0.0;
  std::optional<double> s;
  int z = 0;

  bool observed() const { return s.has_value(); }
};

struct TrialData {
  std::vector<PatientRecord> records;
  int n0 = 0;  // arm-0 count
  int n1 = 0;  // arm-1 count

  // Validates both arms are nonempty and tallies arm sizes.
  static TrialData from_records(std::vector<PatientRecord> recs);

  int size() const { return static_cast<int>(records.size()); }
};

// The three target quantities: overall treatment effect, residual effect
// after fixing the surrogate to its control-arm law, and the proportion of
// the effect the surrogate accounts for.
struct EstimandSet {
  double delta = 0.0;
  double delta_s = 0.0;
  double r_s = 0.0;
};

// Reads a CSV with header columns y,s,z (any order, extra columns ignored
// with a warning). Empty / NA / NaN cells in s mark the surrogate missing.
// Malformed cells raise ParseError naming the line and column.
TrialData load_trial_csv(const std::string& path,
                         std::vector<std::string>* warnings = nullptr);
TrialData parse_trial_csv(std::istream& in,
                          std::vector<std::string>* warnings = nullptr);

// Writes records in y,s,z column order; missing surrogates become empty
// cells. Values round-trip bit-exactly through load_trial_csv.
void write_trial_csv(const TrialData& data, const std::string& path);

// Drops records with missing surrogate; errors if an arm would become empty.
TrialData complete_cases(const TrialData& data);

}  // namespace pte
