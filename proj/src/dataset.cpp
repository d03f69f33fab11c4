#include "rdsmc/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rdsmc {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

char detect_delimiter(const std::string& line) {
  for (char c : {',', ';', '\t'})
    if (line.find(c) != std::string::npos) return c;
  return ' ';
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  if (delim == ' ') {
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
  }
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

Dataset take_rows(const Dataset& d, const std::vector<Index>& idx, std::size_t begin,
                  std::size_t end) {
  Dataset out;
  const auto n = static_cast<Index>(end - begin);
  out.features.resize(n, d.features.cols());
  out.labels.resize(n);
  for (std::size_t k = begin; k < end; ++k) {
    const auto r = static_cast<Index>(k - begin);
    out.features.row(r) = d.features.row(idx[k]);
    out.labels(r) = d.labels(idx[k]);
  }
  return out;
}

}  // namespace

Dataset read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  char delim = 0;
  std::size_t width = 0;
  std::size_t line_no = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!delim) delim = detect_delimiter(t);
    const auto fields = split_fields(t, delim);
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t j = 0; j < fields.size(); ++j)
      if (!parse_number(fields[j], values[j])) numeric = false;
    if (first_data_line) {
      first_data_line = false;
      if (!numeric) continue;  // header row
    }
    const std::string where = path + ":" + std::to_string(line_no);
    if (!numeric) throw std::runtime_error("dataset: non-numeric cell at " + where);
    if (values.size() < 2) throw std::runtime_error("dataset: missing label column at " + where);
    if (width == 0) width = values.size();
    if (values.size() != width)
      throw std::runtime_error("dataset: ragged row at " + where);
    if (values.back() != 0.0 && values.back() != 1.0)
      throw std::runtime_error("dataset: label must be 0 or 1 at " + where);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw std::runtime_error("dataset: no data rows in " + path);
  Dataset d;
  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(width - 1);
  d.features.resize(n, p);
  d.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Index j = 0; j < p; ++j) d.features(i, j) = r[static_cast<std::size_t>(j)];
    d.labels(i) = r.back();
  }
  return d;
}

DatasetSplits split_and_standardize(const Dataset& data, std::uint64_t split_seed) {
  const auto n = static_cast<std::size_t>(data.rows());
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index{0});
  RngStream rng(split_seed, {purpose::split});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
  }
  const std::size_t n_train = n * 6 / 10;
  const std::size_t n_val = n * 2 / 10;
  DatasetSplits s;
  s.train = take_rows(data, idx, 0, n_train);
  s.validation = take_rows(data, idx, n_train, n_train + n_val);
  s.test = take_rows(data, idx, n_train + n_val, n);
  if (n_train == 0) return s;

  const Eigen::RowVectorXd mean = s.train.features.colwise().mean();
  const Eigen::RowVectorXd sd =
      ((s.train.features.rowwise() - mean).array().square().colwise().sum() /
       static_cast<double>(n_train))
          .sqrt();
  for (Index j = 0; j < data.features.cols(); ++j) {
    if (!(sd(j) > 1e-12)) {
      s.constant_columns.push_back(j);
      continue;
    }
    for (Dataset* part : {&s.train, &s.validation, &s.test})
      part->features.col(j) = (part->features.col(j).array() - mean(j)) / sd(j);
  }
  return s;
}

}  // namespace rdsmc
