#include "bemkl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bemkl/error.hpp"

namespace bemkl {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool space_run = false;
  for (char ch : line) {
    if (ch == ',' || ch == ';' || ch == '\t') {
      out.push_back(cur);
      cur.clear();
      space_run = false;
    } else if (ch == ' ' || ch == '\r') {
      space_run = true;
    } else {
      if (space_run && !cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
      space_run = false;
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

FeatureMatrix parse_dataset(std::istream& in, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto fields = split_fields(line.substr(first));
    if (fields.size() < 2) {
      throw FormatError(source + ": line " + std::to_string(line_no) + ": need at least one feature and a label");
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw FormatError(source + ": line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                        " columns, found " + std::to_string(fields.size()));
    }
    std::vector<double> row(width - 1);
    for (std::size_t c = 0; c + 1 < width; ++c) {
      if (!parse_double(fields[c], row[c]) || !std::isfinite(row[c])) {
        throw FormatError(source + ": row " + std::to_string(rows.size() + 1) + " (line " + std::to_string(line_no) +
                          "), column " + std::to_string(c + 1) + ": '" + fields[c] + "' is not a finite number");
      }
    }
    if (fields.back().empty()) {
      throw FormatError(source + ": line " + std::to_string(line_no) + ": empty label");
    }
    rows.push_back(std::move(row));
    labels.push_back(fields.back());
  }
  if (rows.empty()) throw FormatError(source + ": no data rows");
  FeatureMatrix m;
  m.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c + 1 < width; ++c) {
      m.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
  }
  m.labels = std::move(labels);
  return m;
}

FeatureMatrix load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset " + path.string());
  return parse_dataset(in, path.string());
}

Split split_train_test(const std::vector<std::string>& labels, std::uint64_t seed, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("train fraction must lie in (0, 1)");
  std::map<std::string, std::vector<Eigen::Index>> by_class;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = by_class.try_emplace(labels[i]);
    if (inserted) order.push_back(labels[i]);
    it->second.push_back(static_cast<Eigen::Index>(i));
  }
  if (order.size() < 2) throw std::invalid_argument("stratified split needs at least two classes");
  for (const auto& name : order) {
    if (by_class[name].size() < 2) {
      throw std::invalid_argument("class '" + name + "' has a single row; it cannot appear in both parts");
    }
  }

  // Largest-remainder allocation of round(fraction * N) train rows, each
  // class clamped to [1, n_c - 1].
  const auto n = static_cast<double>(labels.size());
  const auto total = static_cast<std::size_t>(std::llround(fraction * n));
  std::vector<std::size_t> take(order.size());
  std::vector<double> remainder(order.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < order.size(); ++c) {
    const double exact = fraction * static_cast<double>(by_class[order[c]].size());
    take[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - std::floor(exact);
    assigned += take[c];
  }
  std::vector<std::size_t> rank(order.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total && k < rank.size(); ++k, ++assigned) ++take[rank[k]];
  for (std::size_t c = 0; c < order.size(); ++c) {
    take[c] = std::clamp<std::size_t>(take[c], 1, by_class[order[c]].size() - 1);
  }

  std::mt19937_64 rng(seed);
  Split split;
  for (std::size_t c = 0; c < order.size(); ++c) {
    auto idx = by_class[order[c]];
    std::shuffle(idx.begin(), idx.end(), rng);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]));
    split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]), idx.end());
  }
  std::shuffle(split.train.begin(), split.train.end(), rng);
  std::shuffle(split.test.begin(), split.test.end(), rng);
  return split;
}

FeatureMatrix subset(const FeatureMatrix& data, std::span<const Eigen::Index> rows) {
  FeatureMatrix out;
  out.rows.resize(static_cast<Eigen::Index>(rows.size()), data.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.rows.row(static_cast<Eigen::Index>(i)) = data.rows.row(rows[i]);
    if (data.has_labels()) out.labels.push_back(data.labels[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

Standardization fit_standardization(const Eigen::MatrixXd& train) {
  if (train.rows() == 0) throw std::invalid_argument("cannot standardize an empty training set");
  Standardization s;
  s.mean = train.colwise().mean();
  s.scale = Eigen::RowVectorXd::Ones(train.cols());
  if (train.rows() > 1) {
    const Eigen::MatrixXd centered = train.rowwise() - s.mean;
    const Eigen::RowVectorXd sd =
        (centered.colwise().squaredNorm() / static_cast<double>(train.rows() - 1)).cwiseSqrt();
    for (Eigen::Index c = 0; c < train.cols(); ++c) {
      if (sd[c] > 0.0) s.scale[c] = sd[c];
    }
  }
  return s;
}

void apply_standardization(const Standardization& stats, Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) return;
  rows = (rows.rowwise() - stats.mean).array().rowwise() / stats.scale.array();
}

Standardization standardize(FeatureMatrix& train, FeatureMatrix& test) {
  if (test.rows.rows() > 0 && test.dim() != train.dim()) {
    throw std::invalid_argument("train and test feature counts differ");
  }
  auto stats = fit_standardization(train.rows);
  apply_standardization(stats, train.rows);
  apply_standardization(stats, test.rows);
  return stats;
}

BinaryLabels encode_binary(const std::vector<std::string>& labels) {
  std::vector<std::string> names;
  for (const auto& l : labels) {
    if (std::find(names.begin(), names.end(), l) == names.end()) names.push_back(l);
  }
  if (names.size() != 2) {
    throw std::invalid_argument("binary training needs exactly two classes, found " + std::to_string(names.size()));
  }
  BinaryLabels out;
  out.positive = names[0];
  out.negative = names[1];
  double a = 0.0, b = 0.0;
  if (parse_double(names[0], a) && parse_double(names[1], b)) {
    const double lo = std::min(a, b), hi = std::max(a, b);
    if ((lo == -1.0 || lo == 0.0) && hi == 1.0) {
      out.positive = a == 1.0 ? names[0] : names[1];
      out.negative = a == 1.0 ? names[1] : names[0];
    }
  }
  out.y.resize(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.y[static_cast<Eigen::Index>(i)] = labels[i] == out.positive ? 1.0 : -1.0;
  }
  return out;
}

std::vector<std::string> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open label file " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  if (out.empty()) throw FormatError("label file " + path.string() + " is empty");
  return out;
}

std::string format_labels(const std::vector<std::string>& labels) {
  std::string out;
  for (const auto& l : labels) out += l + "\n";
  return out;
}

}  // namespace bemkl
