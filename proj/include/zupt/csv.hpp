#ifndef ZUPT_CSV_HPP_
#define ZUPT_CSV_HPP_

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "zupt/error.hpp"
#include "zupt/types.hpp"

namespace zupt::csv
{

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_double(double x)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline void write_double(std::ostream & os, double x)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  os.write(buf, res.ptr - buf);
}

inline std::vector<std::string_view> split(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {s.remove_prefix(1);}
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {s.remove_suffix(1);}
  return s;
}

inline double parse_double(std::string_view field, std::size_t line)
{
  field = trim(field);
  double value = 0.0;
  const char * first = field.data();
  if (!field.empty() && field.front() == '+') {++first;}
  const auto res = std::from_chars(first, field.data() + field.size(), value);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("cannot parse number '" + std::string(field) + "'", line);
  }
  return value;
}

/// Parsed numeric table with its header.
struct Table
{
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/**
 * @brief Read a header line then numeric rows.
 *
 * Blank lines are skipped. Every row must have as many fields as the header.
 */
inline Table read_table(std::istream & in)
{
  Table table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = trim(line);
    if (view.empty()) {continue;}
    if (table.header.empty()) {
      for (auto f : split(view)) {table.header.emplace_back(trim(f));}
      continue;
    }
    const auto fields = split(view);
    if (fields.size() != table.header.size()) {
      throw ParseError(
              "expected " + std::to_string(table.header.size()) + " fields, got " +
              std::to_string(fields.size()), lineno);
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) {row.push_back(parse_double(f, lineno));}
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) {throw ParseError("missing header");}
  return table;
}

inline std::ifstream open_in(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {throw ParseError("cannot open '" + path + "'");}
  return in;
}

inline std::ofstream open_out(const std::string & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {throw Error("cannot write '" + path + "'");}
  return out;
}

inline bool header_is(const std::vector<std::string> & got, const std::vector<std::string> & want)
{
  return got == want;
}

inline std::string join(const std::vector<std::string> & cols)
{
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) {s += ',';}
    s += cols[i];
  }
  return s;
}

inline std::uint8_t parse_flag(double v, std::size_t row)
{
  if (v == 0.0) {return 0;}
  if (v == 1.0) {return 1;}
  throw ParseError("zv flag must be 0 or 1", row + 1);
}

}  // namespace zupt::csv

namespace zupt
{

/// IMU log with the optional per-sample zero-velocity label column.
struct ImuLog
{
  ImuSequence seq;
  std::optional<Flags> labels;
};

/// Nominal rate of a timestamp series, snapped to an integer when within 1 ppm.
inline double estimate_rate(const std::vector<double> & t)
{
  if (t.size() < 2) {return kDefaultRateHz;}
  const double raw = static_cast<double>(t.size() - 1) / (t.back() - t.front());
  const double snapped = std::round(raw);
  return std::abs(raw - snapped) <= 1e-6 * raw ? snapped : raw;
}

/**
 * @brief Parse an IMU CSV (`t,ax,ay,az,gx,gy,gz[,zv]`).
 *
 * @param rate_hz nominal rate; estimated from the timestamps when absent.
 */
inline ImuLog read_imu_csv(std::istream & in, std::optional<double> rate_hz = std::nullopt)
{
  const auto table = csv::read_table(in);
  static const std::vector<std::string> base{"t", "ax", "ay", "az", "gx", "gy", "gz"};
  auto with_label = base;
  with_label.emplace_back("zv");
  const bool labelled = csv::header_is(table.header, with_label);
  if (!labelled && !csv::header_is(table.header, base)) {
    throw ParseError("IMU CSV header must be '" + csv::join(base) + "[,zv]'", 1);
  }
  if (table.rows.empty()) {throw ValidationError("IMU CSV has no data rows");}

  std::vector<ImuSample> samples;
  std::vector<double> times;
  Flags labels;
  samples.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto & row = table.rows[r];
    ImuSample s;
    s.t = row[0];
    s.accel = Vec3(row[1], row[2], row[3]);
    s.gyro = Vec3(row[4], row[5], row[6]);
    if (r > 0 && !(s.t > samples.back().t)) {
      throw ValidationError("time not strictly increasing at row " + std::to_string(r + 1));
    }
    if (labelled) {labels.push_back(csv::parse_flag(row[7], r + 1));}
    times.push_back(s.t);
    samples.push_back(s);
  }
  const double rate = rate_hz.value_or(estimate_rate(times));
  ImuLog log{ImuSequence(std::move(samples), rate), std::nullopt};
  if (labelled) {log.labels = std::move(labels);}
  return log;
}

inline ImuLog load_imu_csv(const std::string & path, std::optional<double> rate_hz = std::nullopt)
{
  auto in = csv::open_in(path);
  return read_imu_csv(in, rate_hz);
}

inline void write_imu_csv(
  std::ostream & os, const ImuSequence & seq,
  const std::optional<Flags> & labels = std::nullopt)
{
  if (labels && labels->size() != seq.size()) {
    throw ContractError("label column length differs from sequence length");
  }
  os << (labels ? "t,ax,ay,az,gx,gy,gz,zv\n" : "t,ax,ay,az,gx,gy,gz\n");
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const auto & s = seq[k];
    csv::write_double(os, s.t);
    for (int i = 0; i < 3; ++i) {os << ','; csv::write_double(os, s.accel[i]);}
    for (int i = 0; i < 3; ++i) {os << ','; csv::write_double(os, s.gyro[i]);}
    if (labels) {os << ',' << int((*labels)[k]);}
    os << '\n';
  }
}

inline void save_imu_csv(
  const std::string & path, const ImuSequence & seq,
  const std::optional<Flags> & labels = std::nullopt)
{
  auto out = csv::open_out(path);
  write_imu_csv(out, seq, labels);
}

/// Parse a ground-truth CSV (`t,px,py,pz[,zv]`).
inline GroundTruth read_ground_truth_csv(std::istream & in)
{
  const auto table = csv::read_table(in);
  static const std::vector<std::string> base{"t", "px", "py", "pz"};
  auto with_label = base;
  with_label.emplace_back("zv");
  const bool labelled = csv::header_is(table.header, with_label);
  if (!labelled && !csv::header_is(table.header, base)) {
    throw ParseError("ground-truth CSV header must be '" + csv::join(base) + "[,zv]'", 1);
  }
  GroundTruth gt;
  Flags labels;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto & row = table.rows[r];
    if (r > 0 && !(row[0] > gt.times.back())) {
      throw ValidationError("time not strictly increasing at row " + std::to_string(r + 1));
    }
    gt.times.push_back(row[0]);
    gt.positions.emplace_back(row[1], row[2], row[3]);
    if (labelled) {labels.push_back(csv::parse_flag(row[4], r + 1));}
  }
  if (labelled) {gt.labels = std::move(labels);}
  gt.validate();
  return gt;
}

inline GroundTruth load_ground_truth_csv(const std::string & path)
{
  auto in = csv::open_in(path);
  return read_ground_truth_csv(in);
}

inline void write_ground_truth_csv(std::ostream & os, const GroundTruth & gt)
{
  os << (gt.labels ? "t,px,py,pz,zv\n" : "t,px,py,pz\n");
  for (std::size_t k = 0; k < gt.size(); ++k) {
    csv::write_double(os, gt.times[k]);
    for (int i = 0; i < 3; ++i) {os << ','; csv::write_double(os, gt.positions[k][i]);}
    if (gt.labels) {os << ',' << int((*gt.labels)[k]);}
    os << '\n';
  }
}

inline void save_ground_truth_csv(const std::string & path, const GroundTruth & gt)
{
  auto out = csv::open_out(path);
  write_ground_truth_csv(out, gt);
}

/// Marker events share the ground-truth layout without the label column.
inline std::vector<Marker> read_markers_csv(std::istream & in)
{
  const auto table = csv::read_table(in);
  if (!csv::header_is(table.header, {"t", "px", "py", "pz"})) {
    throw ParseError("marker CSV header must be 't,px,py,pz'", 1);
  }
  std::vector<Marker> markers;
  for (const auto & row : table.rows) {
    markers.push_back({row[0], Vec3(row[1], row[2], row[3])});
  }
  return markers;
}

inline std::vector<Marker> load_markers_csv(const std::string & path)
{
  auto in = csv::open_in(path);
  return read_markers_csv(in);
}

inline void write_markers_csv(std::ostream & os, const std::vector<Marker> & markers)
{
  os << "t,px,py,pz\n";
  for (const auto & m : markers) {
    csv::write_double(os, m.t);
    for (int i = 0; i < 3; ++i) {os << ','; csv::write_double(os, m.position[i]);}
    os << '\n';
  }
}

}  // namespace zupt

#endif  // ZUPT_CSV_HPP_
