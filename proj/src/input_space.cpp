#include "lvgp/input_space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lvgp/errors.hpp"

namespace lvgp {

using nlohmann::json;

InputSpace::InputSpace(std::vector<QuantVar> quant, std::vector<QualVar> qual,
                       std::string response_name)
    : quant_(std::move(quant)),
      qual_(std::move(qual)),
      response_name_(std::move(response_name)) {
  if (quant_.empty() && qual_.empty())
    throw ValidationError("input space must declare at least one variable");
  std::set<std::string> names;
  for (const auto& q : quant_) {
    if (!std::isfinite(q.lower) || !std::isfinite(q.upper) || !(q.lower < q.upper))
      throw ValidationError("variable '" + q.name + "': bounds must be finite with lower < upper");
    if (!names.insert(q.name).second)
      throw ValidationError("duplicate variable name '" + q.name + "'");
  }
  for (const auto& q : qual_) {
    if (q.levels.size() < 2)
      throw ValidationError("qualitative variable '" + q.name + "' needs at least 2 levels");
    std::set<std::string> labels(q.levels.begin(), q.levels.end());
    if (labels.size() != q.levels.size())
      throw ValidationError("qualitative variable '" + q.name + "' has duplicate level labels");
    if (!names.insert(q.name).second)
      throw ValidationError("duplicate variable name '" + q.name + "'");
  }
}

std::optional<int> InputSpace::level_index(int j, const std::string& label) const {
  const auto& lv = qual_[j].levels;
  auto it = std::find(lv.begin(), lv.end(), label);
  if (it == lv.end()) return std::nullopt;
  return static_cast<int>(it - lv.begin()) + 1;
}

std::string InputSpace::to_json() const {
  json doc;
  doc["quant"] = json::array();
  for (const auto& q : quant_)
    doc["quant"].push_back({{"name", q.name}, {"lower", q.lower}, {"upper", q.upper}});
  doc["qual"] = json::array();
  for (const auto& q : qual_)
    doc["qual"].push_back({{"name", q.name}, {"levels", q.levels}});
  doc["response"] = response_name_;
  return doc.dump(2);
}

InputSpace InputSpace::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("space declaration is not valid JSON: ") + e.what());
  }
  std::vector<QuantVar> quant;
  std::vector<QualVar> qual;
  for (const auto& q : doc.value("quant", json::array()))
    quant.push_back({q.at("name").get<std::string>(), q.at("lower").get<double>(),
                     q.at("upper").get<double>()});
  for (const auto& q : doc.value("qual", json::array()))
    qual.push_back({q.at("name").get<std::string>(),
                    q.at("levels").get<std::vector<std::string>>()});
  return InputSpace(std::move(quant), std::move(qual), doc.value("response", "y"));
}

InputSpace InputSpace::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open space file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

Eigen::MatrixXd ScalingInfo::scale_x(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out = x;
  for (Eigen::Index i = 0; i < out.cols(); ++i)
    out.col(i) = (out.col(i).array() - x_shift[i]) / x_scale[i];
  return out;
}

Eigen::MatrixXd ScalingInfo::unscale_x(const Eigen::MatrixXd& x01) const {
  Eigen::MatrixXd out = x01;
  for (Eigen::Index i = 0; i < out.cols(); ++i)
    out.col(i) = out.col(i).array() * x_scale[i] + x_shift[i];
  return out;
}

namespace {

// Minimal CSV splitting: fields separated by commas, optional double quotes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

RawTable RawTable::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open CSV file: " + path);
  RawTable table;
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("CSV file is empty: " + path);
  table.columns = split_csv_line(line);
  for (auto& c : table.columns) c = trim(c);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != table.columns.size())
      throw ValidationError("CSV row " + std::to_string(table.rows.size() + 2) +
                            " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(table.columns.size()));
    for (auto& f : fields) f = trim(f);
    table.rows.push_back(std::move(fields));
  }
  return table;
}

void RawTable::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file: " + path);
  auto write_row = [&out](const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (row[i].find_first_of(",\"\n") != std::string::npos) {
        out << '"';
        for (char c : row[i]) {
          if (c == '"') out << "\"\"";
          out << c;
        }
        out << '"';
      } else {
        out << row[i];
      }
    }
    out << '\n';
  };
  write_row(columns);
  for (const auto& r : rows) write_row(r);
}

Dataset validate(const InputSpace& space, const RawTable& table,
                 std::vector<std::string>* warnings) {
  const int I = space.num_quant();
  const int J = space.num_qual();
  std::vector<int> quant_col(I), qual_col(J);
  int resp_col = -1;
  auto find_col = [&table](const std::string& name) {
    auto it = std::find(table.columns.begin(), table.columns.end(), name);
    if (it == table.columns.end())
      throw ValidationError("column '" + name + "' not found in table");
    return static_cast<int>(it - table.columns.begin());
  };
  for (int i = 0; i < I; ++i) quant_col[i] = find_col(space.quant()[i].name);
  for (int j = 0; j < J; ++j) qual_col[j] = find_col(space.qual()[j].name);
  bool with_response =
      std::find(table.columns.begin(), table.columns.end(), space.response_name()) !=
      table.columns.end();
  if (with_response) resp_col = find_col(space.response_name());

  const int N = static_cast<int>(table.rows.size());
  if (N < 2) throw ValidationError("need at least 2 rows, got " + std::to_string(N));

  Dataset data;
  data.x.resize(N, I);
  data.levels.resize(N, J);
  if (with_response) data.y.resize(N);

  auto parse_num = [](const std::string& s, int row, const std::string& col) {
    try {
      size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ValidationError("row " + std::to_string(row + 1) + ", column '" + col +
                            "': non-numeric entry '" + s + "'");
    }
  };

  for (int n = 0; n < N; ++n) {
    const auto& row = table.rows[n];
    for (int i = 0; i < I; ++i) {
      const auto& qv = space.quant()[i];
      double v = parse_num(row[quant_col[i]], n, qv.name);
      if ((v < qv.lower || v > qv.upper) && warnings)
        warnings->push_back("row " + std::to_string(n + 1) + ": '" + qv.name +
                            "' = " + std::to_string(v) + " outside declared bounds [" +
                            std::to_string(qv.lower) + ", " + std::to_string(qv.upper) + "]");
      data.x(n, i) = v;
    }
    for (int j = 0; j < J; ++j) {
      const std::string& label = row[qual_col[j]];
      auto idx = space.level_index(j, label);
      if (!idx)
        throw ValidationError("row " + std::to_string(n + 1) + ", column '" +
                              space.qual()[j].name + "': unknown level label '" + label + "'");
      data.levels(n, j) = *idx;
    }
    if (with_response) data.y[n] = parse_num(row[resp_col], n, space.response_name());
  }
  return data;
}

std::pair<Dataset, ScalingInfo> standardize(const Dataset& data, const InputSpace& space,
                                            std::vector<std::string>* warnings) {
  const int I = space.num_quant();
  ScalingInfo info;
  info.x_shift.resize(I);
  info.x_scale.resize(I);
  for (int i = 0; i < I; ++i) {
    info.x_shift[i] = space.quant()[i].lower;
    info.x_scale[i] = space.quant()[i].upper - space.quant()[i].lower;
  }
  Dataset out = data;
  out.x = info.scale_x(data.x);
  if (data.has_response()) {
    const int N = data.n();
    info.y_mean = data.y.mean();
    double ss = (data.y.array() - info.y_mean).square().sum();
    double var = ss / N;
    if (var <= 0.0) {
      info.y_sd = 1.0;
      if (warnings) warnings->push_back("response has zero variance; scaling by 1");
    } else {
      info.y_sd = std::sqrt(var);
    }
    out.y = (data.y.array() - info.y_mean) / info.y_sd;
  }
  return {std::move(out), std::move(info)};
}

Dataset stratified_doe(const InputSpace& space, int per_level, std::uint64_t seed) {
  if (per_level < 1) throw ValidationError("per_level must be >= 1");
  const int I = space.num_quant();
  const int J = space.num_qual();
  long total_levels = 1;
  for (int j = 0; j < J; ++j) total_levels *= space.levels(j);
  const int N = static_cast<int>(per_level * total_levels);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Dataset design;
  design.x.resize(N, I);
  design.levels.resize(N, J);

  // LHS on [0,1]^I with uniform jitter within strata, then rescale.
  for (int i = 0; i < I; ++i) {
    std::vector<int> perm(N);
    for (int k = 0; k < N; ++k) perm[k] = k;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int k = 0; k < N; ++k) {
      double u01 = (perm[k] + unif(rng)) / N;
      design.x(k, i) = space.quant()[i].lower +
                       u01 * (space.quant()[i].upper - space.quant()[i].lower);
    }
  }

  // Each joint level combination occurs exactly per_level times; row
  // assignment is a random shuffle of the repeated combination list.
  std::vector<int> combo(N);
  for (int k = 0; k < N; ++k) combo[k] = static_cast<int>(k / per_level % total_levels);
  std::shuffle(combo.begin(), combo.end(), rng);
  for (int k = 0; k < N; ++k) {
    int c = combo[k];
    for (int j = 0; j < J; ++j) {
      design.levels(k, j) = c % space.levels(j) + 1;
      c /= space.levels(j);
    }
  }
  return design;
}

RawTable to_table(const InputSpace& space, const Dataset& data) {
  RawTable table;
  for (const auto& q : space.quant()) table.columns.push_back(q.name);
  for (const auto& q : space.qual()) table.columns.push_back(q.name);
  if (data.has_response()) table.columns.push_back(space.response_name());
  const int N = data.n();
  table.rows.reserve(N);
  std::ostringstream ss;
  ss.precision(17);
  for (int n = 0; n < N; ++n) {
    std::vector<std::string> row;
    for (int i = 0; i < space.num_quant(); ++i) {
      ss.str("");
      ss << data.x(n, i);
      row.push_back(ss.str());
    }
    for (int j = 0; j < space.num_qual(); ++j)
      row.push_back(space.qual()[j].levels[data.levels(n, j) - 1]);
    if (data.has_response()) {
      ss.str("");
      ss << data.y[n];
      row.push_back(ss.str());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace lvgp
