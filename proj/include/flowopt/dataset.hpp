#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "flowopt/domain.hpp"

namespace flowopt {

struct DatasetRow {
  int iteration = 0;
  DesignPoint x;
  ObjectiveVector y;
  bool excluded = false;
};

/// Experiment table in the SI layout. Rows keep their file order.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<DatasetRow> rows);

  const std::vector<DatasetRow>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  /// Appends a row; enforces non-decreasing iteration and unique
  /// (iteration, design) pairs.
  void append(DatasetRow row);

  std::vector<DatasetRow> trainable() const;
  /// n x 4 design matrix of rows that may enter surrogate training.
  Eigen::MatrixXd trainable_inputs() const;
  /// n x 3 objective matrix of those rows.
  Eigen::MatrixXd trainable_objectives() const;

 private:
  std::vector<DatasetRow> rows_;
};

/// Reads the experiment CSV (iteration,f_i,f_m,temp,c_ctab,dr2,f_product_neg,excluded).
/// The temperature objective is derived from `temp` and `k.t_min`.
Dataset parse_dataset(std::istream& in, std::string_view source, const Bounds& bounds = Bounds::reactor(),
                      const ProcessConstants& k = {});
Dataset load_dataset(const std::string& path, const Bounds& bounds = Bounds::reactor(),
                     const ProcessConstants& k = {});
void write_dataset(std::ostream& out, const Dataset& data);

/// Final monomer fraction that reproduces a stored product flow at the
/// given design; used to replay tables that only print F_Product.
double back_solve_final_fraction(const DesignPoint& x, double product_flow, const ProcessConstants& k);
/// Radius above target consistent with a stored squared deviation.
double back_solve_radius(double sq_radius_dev, const ProcessConstants& k);

/// Converts a stored row into the raw measurement it implies.
Measurement measurement_from_row(const DatasetRow& row, const ProcessConstants& k);

// Bundled SI tables.
std::string_view si_table_s1_csv() noexcept;
Dataset si_table_s1();

/// One row of a validation sweep table (f_i, f_m, temp, c_ctab, eps, objective).
struct SweepTableRow {
  DesignPoint x;
  double eps = 0.0;
  double objective = 0.0;
};

std::vector<SweepTableRow> parse_sweep_table(std::istream& in, std::string_view source);
/// Tables S2-S5, keyed by the temperature upper bound 80, 70, 62, 61.
std::vector<SweepTableRow> si_sweep_table(int temp_upper);

}  // namespace flowopt
