#include "flowopt/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "flowopt/error.hpp"

namespace flowopt {
namespace {

constexpr std::string_view kDatasetHeader = "iteration,f_i,f_m,temp,c_ctab,dr2,f_product_neg,excluded";
constexpr std::string_view kSweepHeader = "f_i,f_m,temp,c_ctab,eps,objective";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void parse_fail(std::string_view source, std::size_t line, std::string_view column,
                             const std::string& what) {
  std::ostringstream msg;
  msg << source << ": row " << line << ", column " << column << ": " << what;
  fail(ErrorKind::parse_error, msg.str());
}

double parse_double(std::string_view field, std::string_view source, std::size_t line, std::string_view column) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    parse_fail(source, line, column, "expected a number, got '" + std::string(field) + "'");
  }
  return value;
}

int parse_int(std::string_view field, std::string_view source, std::size_t line, std::string_view column) {
  int value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    parse_fail(source, line, column, "expected an integer, got '" + std::string(field) + "'");
  }
  return value;
}

// Strips a UTF-8 byte order mark and reads the header line.
bool read_header(std::istream& in, std::string_view expected, std::string_view source) {
  std::string line;
  if (!std::getline(in, line)) return false;
  std::string_view view = line;
  if (view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
  if (trim(view) != expected) {
    fail(ErrorKind::parse_error, std::string(source) + ": header must be '" + std::string(expected) + "'");
  }
  return true;
}

}  // namespace

Dataset::Dataset(std::vector<DatasetRow> rows) {
  rows_.reserve(rows.size());
  for (auto& r : rows) append(std::move(r));
}

void Dataset::append(DatasetRow row) {
  if (!rows_.empty()) {
    require(row.iteration >= rows_.back().iteration, ErrorKind::invalid_input,
            "dataset iterations must be non-decreasing");
  }
  for (const auto& r : rows_) {
    if (r.iteration == row.iteration && r.x == row.x) {
      fail(ErrorKind::invalid_input, "duplicate design point in iteration " + std::to_string(row.iteration));
    }
  }
  rows_.push_back(std::move(row));
}

std::vector<DatasetRow> Dataset::trainable() const {
  std::vector<DatasetRow> out;
  for (const auto& r : rows_) {
    if (!r.excluded) out.push_back(r);
  }
  return out;
}

Eigen::MatrixXd Dataset::trainable_inputs() const {
  const auto rows = trainable();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), kDesignDims);
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = rows[i].x.vector();
  return x;
}

Eigen::MatrixXd Dataset::trainable_objectives() const {
  const auto rows = trainable();
  Eigen::MatrixXd y(static_cast<Eigen::Index>(rows.size()), kObjectives);
  for (std::size_t i = 0; i < rows.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = rows[i].y.vector();
  return y;
}

Dataset parse_dataset(std::istream& in, std::string_view source, const Bounds& bounds, const ProcessConstants& k) {
  static constexpr const char* kCols[] = {"iteration", "f_i", "f_m", "temp", "c_ctab", "dr2", "f_product_neg",
                                          "excluded"};
  Dataset data;
  if (!read_header(in, kDatasetHeader, source)) return data;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 8) {
      parse_fail(source, line_no, "*", "expected 8 fields, got " + std::to_string(fields.size()));
    }
    DatasetRow row;
    row.iteration = parse_int(fields[0], source, line_no, kCols[0]);
    if (row.iteration < 0) parse_fail(source, line_no, kCols[0], "iteration must be non-negative");
    row.x.f_i = parse_double(fields[1], source, line_no, kCols[1]);
    row.x.f_m = parse_double(fields[2], source, line_no, kCols[2]);
    row.x.temp = parse_double(fields[3], source, line_no, kCols[3]);
    row.x.c_ctab = parse_double(fields[4], source, line_no, kCols[4]);
    row.y.sq_radius_dev = parse_double(fields[5], source, line_no, kCols[5]);
    row.y.neg_product_flow = parse_double(fields[6], source, line_no, kCols[6]);
    const int excluded = parse_int(fields[7], source, line_no, kCols[7]);
    if (excluded != 0 && excluded != 1) parse_fail(source, line_no, kCols[7], "expected 0 or 1");
    row.excluded = excluded == 1;

    const Eigen::Vector4d v = row.x.vector();
    static constexpr int kDimToCol[] = {1, 2, 4, 3};
    for (Eigen::Index d = 0; d < kDesignDims; ++d) {
      if (!(v(d) >= bounds.lower(d) && v(d) <= bounds.upper(d))) {
        std::ostringstream msg;
        msg << "value " << v(d) << " outside bounds [" << bounds.lower(d) << ", " << bounds.upper(d) << "]";
        parse_fail(source, line_no, kCols[kDimToCol[d]], msg.str());
      }
    }
    if (row.y.sq_radius_dev < 0) parse_fail(source, line_no, kCols[5], "squared deviation must be >= 0");
    if (row.y.neg_product_flow > 0) parse_fail(source, line_no, kCols[6], "negated product flow must be <= 0");
    row.y.temp_dev = compute_temp_objective(row.x.temp, k.t_min);

    try {
      data.append(row);
    } catch (const Error& e) {
      parse_fail(source, line_no, kCols[0], e.what());
    }
  }
  return data;
}

Dataset load_dataset(const std::string& path, const Bounds& bounds, const ProcessConstants& k) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::invalid_input, "cannot open dataset '" + path + "'");
  return parse_dataset(in, path, bounds, k);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << kDatasetHeader << '\n';
  for (const auto& r : data.rows()) {
    out << r.iteration << ',' << r.x.f_i << ',' << r.x.f_m << ',' << r.x.temp << ',' << r.x.c_ctab << ','
        << std::fixed << std::setprecision(2) << r.y.sq_radius_dev << ',' << r.y.neg_product_flow
        << std::defaultfloat << std::setprecision(6) << ',' << (r.excluded ? 1 : 0) << '\n';
  }
}

double back_solve_final_fraction(const DesignPoint& x, double product_flow, const ProcessConstants& k) {
  const double w0 = compute_initial_weight_fraction(x, k);
  const double conversion = product_flow / (x.f_i + x.f_m);
  return w0 * (1.0 - conversion);
}

double back_solve_radius(double sq_radius_dev, const ProcessConstants& k) {
  require(sq_radius_dev >= 0.0, ErrorKind::invalid_input, "squared deviation must be non-negative");
  return k.r_h_target + std::sqrt(sq_radius_dev);
}

Measurement measurement_from_row(const DatasetRow& row, const ProcessConstants& k) {
  Measurement m;
  m.w_nipam_f = std::max(0.0, back_solve_final_fraction(row.x, -row.y.neg_product_flow, k));
  m.r_h = back_solve_radius(row.y.sq_radius_dev, k);
  m.excluded = row.excluded ? ExclusionReason::high_relative_error : ExclusionReason::none;
  m.sigma_w = k.rmsecv;
  return m;
}

std::vector<SweepTableRow> parse_sweep_table(std::istream& in, std::string_view source) {
  static constexpr const char* kCols[] = {"f_i", "f_m", "temp", "c_ctab", "eps", "objective"};
  std::vector<SweepTableRow> out;
  if (!read_header(in, kSweepHeader, source)) return out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 6) parse_fail(source, line_no, "*", "expected 6 fields");
    double v[6];
    for (int c = 0; c < 6; ++c) v[c] = parse_double(fields[static_cast<std::size_t>(c)], source, line_no, kCols[c]);
    out.push_back({DesignPoint{v[0], v[1], v[3], v[2]}, v[4], v[5]});
  }
  return out;
}

}  // namespace flowopt
