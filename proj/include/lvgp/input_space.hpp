#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace lvgp {

struct QuantVar {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
};

struct QualVar {
  std::string name;
  std::vector<std::string> levels;  // declaration order defines indices 1..L
};

/// Declaration of the product input space: I quantitative inputs with finite
/// bounds and J qualitative inputs with at least two levels each.
class InputSpace {
 public:
  InputSpace(std::vector<QuantVar> quant, std::vector<QualVar> qual,
             std::string response_name = "y");

  int num_quant() const { return static_cast<int>(quant_.size()); }
  int num_qual() const { return static_cast<int>(qual_.size()); }
  const std::vector<QuantVar>& quant() const { return quant_; }
  const std::vector<QualVar>& qual() const { return qual_; }
  const std::string& response_name() const { return response_name_; }

  int levels(int j) const { return static_cast<int>(qual_[j].levels.size()); }

  /// 1-based level index for a label, or nullopt if not declared.
  std::optional<int> level_index(int j, const std::string& label) const;

  std::string to_json() const;
  static InputSpace from_json(const std::string& text);
  static InputSpace from_json_file(const std::string& path);

 private:
  std::vector<QuantVar> quant_;
  std::vector<QualVar> qual_;
  std::string response_name_;
};

/// Validated observations. Quantitative columns first (N x I), then the
/// qualitative level indices (N x J, values in 1..L_j), and responses.
struct Dataset {
  Eigen::MatrixXd x;       // N x I
  Eigen::MatrixXi levels;  // N x J, 1-based
  Eigen::VectorXd y;       // N (empty for design-only datasets)

  int n() const { return static_cast<int>(x.rows() > 0 ? x.rows() : levels.rows()); }
  bool has_response() const { return y.size() > 0; }
};

/// Affine maps taking quantitative inputs to [0,1] and the response to
/// sample mean 0 / sample s.d. 1. Invertible to machine precision.
struct ScalingInfo {
  Eigen::VectorXd x_shift, x_scale;  // x01 = (x - shift) / scale
  double y_mean = 0.0;
  double y_sd = 1.0;

  Eigen::MatrixXd scale_x(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd unscale_x(const Eigen::MatrixXd& x01) const;
  double scale_y(double y) const { return (y - y_mean) / y_sd; }
  double unscale_y(double ys) const { return ys * y_sd + y_mean; }
};

/// One cell of a raw input table, as read from CSV: either a number or a
/// level label.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  static RawTable read_csv(const std::string& path);
  void write_csv(const std::string& path) const;
};

/// Check a raw table against the space declaration, converting level labels
/// to indices. Rejects unknown labels and non-numeric quantitative entries
/// naming the offending row and column. Out-of-bounds quantitative values
/// produce warnings, not rejections.
Dataset validate(const InputSpace& space, const RawTable& table,
                 std::vector<std::string>* warnings = nullptr);

/// Map quantitative columns to [0,1] by the declared bounds and center/scale
/// the response. Qualitative indices are untouched. A zero-variance response
/// is scaled by 1 with a warning.
std::pair<Dataset, ScalingInfo> standardize(const Dataset& data,
                                            const InputSpace& space,
                                            std::vector<std::string>* warnings = nullptr);

/// Two-step design of experiments: a Latin hypercube sample (uniform jitter
/// within strata) for the quantitative inputs, with joint qualitative level
/// combinations each assigned to exactly per_level rows by stratified
/// shuffling. N = per_level * prod(L_j).
Dataset stratified_doe(const InputSpace& space, int per_level,
                       std::uint64_t seed);

/// Render a dataset back into a labeled table (inverse of validate, minus
/// the response column when absent).
RawTable to_table(const InputSpace& space, const Dataset& data);

}  // namespace lvgp
