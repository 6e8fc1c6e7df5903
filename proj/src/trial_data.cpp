#include "pte/trial_data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pte/errors.hpp"

namespace pte {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  if (out.empty()) out.emplace_back();
  return out;
}

double parse_double(const std::string& raw, int line_no, const char* col) {
  const std::string tok = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line_no) + ", column '" + col +
                     "': cannot parse value '" + tok + "'");
  }
  return v;
}

bool is_missing_token(const std::string& tok) {
  const std::string t = lower(trim(tok));
  return t.empty() || t == "na" || t == "nan";
}

}  // namespace

TrialData TrialData::from_records(std::vector<PatientRecord> recs) {
  TrialData data;
  data.records = std::move(recs);
  for (const auto& r : data.records) {
    if (r.z == 0)
      ++data.n0;
    else
      ++data.n1;
  }
  if (data.n0 == 0) throw ValidationError("arm 0 has no records");
  if (data.n1 == 0) throw ValidationError("arm 1 has no records");
  return data;
}

TrialData parse_trial_csv(std::istream& in, std::vector<std::string>* warnings) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: no header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv_line(line);
  int col_y = -1, col_s = -1, col_z = -1;
  std::vector<std::string> extras;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const std::string name = lower(trim(header[j]));
    if (name == "y")
      col_y = static_cast<int>(j);
    else if (name == "s")
      col_s = static_cast<int>(j);
    else if (name == "z")
      col_z = static_cast<int>(j);
    else
      extras.push_back(trim(header[j]));
  }
  if (col_y < 0 || col_s < 0 || col_z < 0) {
    throw ParseError("header must contain columns y, s, z (got '" + line + "')");
  }
  if (!extras.empty() && warnings != nullptr) {
    std::string msg = "ignoring extra column(s):";
    for (const auto& e : extras) msg += " '" + e + "'";
    warnings->push_back(msg);
  }

  std::vector<PatientRecord> recs;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    const auto cell = [&](int j) -> const std::string& {
      static const std::string empty;
      return j < static_cast<int>(cells.size()) ? cells[j] : empty;
    };

    PatientRecord rec;
    rec.y = parse_double(cell(col_y), line_no, "y");
    if (!is_missing_token(cell(col_s))) {
      rec.s = parse_double(cell(col_s), line_no, "s");
    }
    const double z = parse_double(cell(col_z), line_no, "z");
    if (z != 0.0 && z != 1.0) {
      throw ParseError("line " + std::to_string(line_no) +
                       ", column 'z': value must be 0 or 1, got '" +
                       trim(cell(col_z)) + "'");
    }
    rec.z = static_cast<int>(z);
    recs.push_back(rec);
  }
  if (recs.empty()) throw ValidationError("no data rows");
  return TrialData::from_records(std::move(recs));
}

TrialData load_trial_csv(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  return parse_trial_csv(in, warnings);
}

namespace {

// Shortest decimal that round-trips through from_chars.
std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

void write_trial_csv(const TrialData& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << "y,s,z\n";
  for (const auto& r : data.records) {
    out << format_double(r.y) << ',';
    if (r.s) out << format_double(*r.s);
    out << ',' << r.z << '\n';
  }
  if (!out) throw ValidationError("write failed: " + path);
}

TrialData complete_cases(const TrialData& data) {
  std::vector<PatientRecord> kept;
  kept.reserve(data.records.size());
  for (const auto& r : data.records) {
    if (r.observed()) kept.push_back(r);
  }
  int n0 = 0, n1 = 0;
  for (const auto& r : kept) (r.z == 0 ? n0 : n1)++;
  if (n0 == 0) throw ValidationError("arm 0 empty after complete-case filter");
  if (n1 == 0) throw ValidationError("arm 1 empty after complete-case filter");
  return TrialData::from_records(std::move(kept));
}

}  // namespace pte
