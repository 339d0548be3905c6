#include "safedmp/io.h"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace safedmp {

namespace {

std::vector<std::string> SplitFields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto first = field.find_first_not_of(" \t");
    const auto last = field.find_last_not_of(" \t");
    fields.push_back(first == std::string::npos ? "" : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double ParseNumber(const std::string& field, std::size_t line_no) {
  if (field == "inf") return std::numeric_limits<double>::infinity();
  if (field == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE) {
    Fail(ErrorCode::kParse,
         "line " + std::to_string(line_no) + ": '" + field + "' is not a number");
  }
  return value;
}

// Lines with trailing CR stripped; blank lines dropped but counted.
std::vector<std::pair<std::size_t, std::string>> Lines(const std::string& text) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.emplace_back(n, line);
  }
  return out;
}

}  // namespace

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

TimedTrajectory ParseDemoCsv(const std::string& text) {
  const auto lines = Lines(text);
  Require(!lines.empty(), ErrorCode::kParse, "line 1: empty demonstration file");
  const auto header = SplitFields(lines[0].second);
  const bool planar = header == std::vector<std::string>{"t", "x", "y"};
  const bool spatial = header == std::vector<std::string>{"t", "x", "y", "z"};
  if (!planar && !spatial) {
    Fail(ErrorCode::kParse, "line " + std::to_string(lines[0].first) +
                                ": expected header t,x,y or t,x,y,z");
  }
  const int d = planar ? 2 : 3;
  TimedTrajectory traj;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [line_no, line] = lines[i];
    const auto fields = SplitFields(line);
    if (fields.size() != static_cast<std::size_t>(d + 1)) {
      Fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(d + 1) + " fields, got " +
                                  std::to_string(fields.size()));
    }
    const double t = ParseNumber(fields[0], line_no);
    Vec p(d);
    for (int k = 0; k < d; ++k) p(k) = ParseNumber(fields[k + 1], line_no);
    if (!std::isfinite(t) || !p.allFinite()) {
      Fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": non-finite value");
    }
    if (!traj.times.empty() && !(t > traj.times.back())) {
      Fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": time must increase");
    }
    traj.times.push_back(t);
    traj.points.push_back(std::move(p));
  }
  return traj;
}

TimedTrajectory ReadDemoCsv(const std::string& path) { return ParseDemoCsv(ReadTextFile(path)); }

std::string FormatDemoCsv(const TimedTrajectory& traj) {
  std::string out = traj.dim() == 2 ? "t,x,y\n" : "t,x,y,z\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out += FormatDouble(traj.times[i]);
    for (Eigen::Index k = 0; k < traj.points[i].size(); ++k) {
      out += ',';
      out += FormatDouble(traj.points[i](k));
    }
    out += '\n';
  }
  return out;
}

std::string FormatLogCsv(const std::vector<StepRecord>& records) {
  const int d = records.empty() ? 0 : static_cast<int>(records.front().x_measured.size());
  std::string out = "t";
  for (const char* prefix : {"xn_", "xs_", "xd_", "xm_"}) {
    for (int k = 0; k < d; ++k) out += "," + std::string(prefix) + std::to_string(k);
  }
  out += ",tau,z,min_clearance\n";
  for (const StepRecord& r : records) {
    out += FormatDouble(r.t);
    for (const Vec* v : {&r.x_nominal, &r.x_safe, &r.x_desired, &r.x_measured}) {
      for (int k = 0; k < d; ++k) {
        out += ',';
        out += FormatDouble((*v)(k));
      }
    }
    for (double v : {r.tau, r.z, r.min_clearance}) {
      out += ',';
      out += FormatDouble(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<StepRecord> ParseLogCsv(const std::string& text) {
  const auto lines = Lines(text);
  Require(!lines.empty(), ErrorCode::kParse, "line 1: empty log file");
  const auto header = SplitFields(lines[0].second);
  const std::size_t cols = header.size();
  Require(cols >= 4 && (cols - 4) % 4 == 0 && header[0] == "t", ErrorCode::kParse,
          "line 1: unrecognised log header");
  const int d = static_cast<int>((cols - 4) / 4);
  std::vector<StepRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [line_no, line] = lines[i];
    const auto fields = SplitFields(line);
    if (fields.size() != cols) {
      Fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(cols) + " fields");
    }
    StepRecord r;
    std::size_t c = 0;
    r.t = ParseNumber(fields[c++], line_no);
    for (Vec* v : {&r.x_nominal, &r.x_safe, &r.x_desired, &r.x_measured}) {
      v->resize(d);
      for (int k = 0; k < d; ++k) (*v)(k) = ParseNumber(fields[c++], line_no);
    }
    r.tau = ParseNumber(fields[c++], line_no);
    r.z = ParseNumber(fields[c++], line_no);
    r.min_clearance = ParseNumber(fields[c++], line_no);
    records.push_back(std::move(r));
  }
  return records;
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kInvalidInput, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorCode::kInvalidInput, "cannot write '" + path + "'");
  out << contents;
  Require(static_cast<bool>(out), ErrorCode::kInvalidInput, "write to '" + path + "' failed");
}

}  // namespace safedmp
