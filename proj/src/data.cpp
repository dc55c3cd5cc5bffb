#include "sgmv/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string_view>
#include <vector>

#include "sgmv/error.hpp"

namespace sgmv {

Dataset::Dataset(RowMatrix features, Vector targets, std::string name)
    : features_(std::move(features)),
      targets_(std::move(targets)),
      name_(std::move(name)) {
  if (features_.rows() < 1) throw EmptyInputError("dataset has no samples");
  if (features_.cols() < 1) {
    throw DimensionError("dataset needs n >= 1 and d >= 1, got " +
                         std::to_string(features_.rows()) + "x" +
                         std::to_string(features_.cols()));
  }
  if (targets_.size() != features_.rows()) {
    throw DimensionError("targets length " + std::to_string(targets_.size()) +
                         " != rows " + std::to_string(features_.rows()));
  }
  if (!features_.allFinite() || !targets_.allFinite()) {
    throw NumericError("dataset contains non-finite values");
  }
}

bool Dataset::operator==(const Dataset& other) const {
  return features_.rows() == other.features_.rows() &&
         features_.cols() == other.features_.cols() &&
         features_ == other.features_ && targets_ == other.targets_;
}

namespace {

struct SparseRow {
  double label;
  std::vector<std::pair<Eigen::Index, double>> entries;
};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n';
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  // from_chars rejects a leading '+', which LIBSVM writers sometimes emit.
  if (s.front() == '+') s.remove_prefix(1);
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

SparseRow parse_line(std::string_view line, std::size_t line_no) {
  auto tokens = split_ws(line);
  SparseRow row{};
  if (!parse_number(tokens.front(), row.label) || !std::isfinite(row.label)) {
    throw ParseError(line_no, "bad label '" + std::string(tokens.front()) + "'");
  }
  Eigen::Index last = 0;
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    auto tok = tokens[t];
    auto colon = tok.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError(line_no, "expected idx:val, got '" + std::string(tok) + "'");
    }
    long long idx = 0;
    double val = 0.0;
    if (!parse_number(tok.substr(0, colon), idx)) {
      throw ParseError(line_no, "non-numeric index in '" + std::string(tok) + "'");
    }
    if (!parse_number(tok.substr(colon + 1), val)) {
      throw ParseError(line_no, "non-numeric value in '" + std::string(tok) + "'");
    }
    if (idx <= 0) {
      throw ParseError(line_no, "index must be >= 1, got " + std::to_string(idx));
    }
    if (idx <= last) {
      throw ParseError(line_no, "non-increasing index " + std::to_string(idx) +
                                    " after " + std::to_string(last));
    }
    if (!std::isfinite(val)) {
      throw ParseError(line_no, "non-finite value at index " + std::to_string(idx));
    }
    last = static_cast<Eigen::Index>(idx);
    row.entries.emplace_back(last, val);
  }
  return row;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<Eigen::Index> expected_dim,
                     std::string name) {
  if (expected_dim && *expected_dim < 1) {
    throw ArgumentError("expected_dim must be positive");
  }
  std::vector<SparseRow> rows;
  Eigen::Index max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    auto first = view.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || view[first] == '#') continue;
    SparseRow row = parse_line(view, line_no);
    if (!row.entries.empty()) {
      Eigen::Index top = row.entries.back().first;
      if (expected_dim && top > *expected_dim) {
        throw DimensionError("line " + std::to_string(line_no) + ": index " +
                             std::to_string(top) + " exceeds dimension " +
                             std::to_string(*expected_dim));
      }
      max_index = std::max(max_index, top);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyInputError("no samples in LIBSVM input");

  const Eigen::Index d = expected_dim.value_or(max_index);
  if (d < 1) throw DimensionError("no feature indices found and no dimension given");

  RowMatrix x = RowMatrix::Zero(static_cast<Eigen::Index>(rows.size()), d);
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    y(r) = rows[i].label;
    for (auto [idx, val] : rows[i].entries) x(r, idx - 1) = val;
  }
  return Dataset(std::move(x), std::move(y), std::move(name));
}

Dataset load_libsvm(const std::string& path,
                    std::optional<Eigen::Index> expected_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  auto slash = path.find_last_of('/');
  return parse_libsvm(in, expected_dim,
                      slash == std::string::npos ? path : path.substr(slash + 1));
}

namespace {

void put_double(std::ostream& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

}  // namespace

void write_libsvm(std::ostream& out, const Dataset& ds) {
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    put_double(out, ds.targets()(i));
    for (Eigen::Index j = 0; j < ds.d(); ++j) {
      double v = ds.features()(i, j);
      if (v == 0.0) continue;
      out << ' ' << (j + 1) << ':';
      put_double(out, v);
    }
    out << '\n';
  }
}

void save_libsvm(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_libsvm(out, ds);
  if (!out) throw IoError("write failed for '" + path + "'");
}

Dataset maxmin_scale(const Dataset& ds) {
  RowMatrix x = ds.features();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double lo = x.col(j).minCoeff();
    const double hi = x.col(j).maxCoeff();
    if (hi == lo) {
      x.col(j).setZero();
      continue;
    }
    const double span = hi - lo;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      x(i, j) = std::clamp(2.0 * (x(i, j) - lo) / span - 1.0, -1.0, 1.0);
    }
  }
  return Dataset(std::move(x), ds.targets(), ds.name());
}

SyntheticRidge synth_ridge(Eigen::Index n, Eigen::Index d, double noise_sd,
                           std::uint64_t seed) {
  if (n <= 0 || d <= 0) throw ArgumentError("synth_ridge needs n > 0 and d > 0");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw ArgumentError("noise_sd must be finite and nonnegative");
  }
  if (n < d) {
    warn("synth_ridge: n=" + std::to_string(n) + " < d=" + std::to_string(d));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  Vector w(d);
  for (Eigen::Index j = 0; j < d; ++j) w(j) = gauss(rng);

  RowMatrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = unif(rng);
  }
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = x.row(i).dot(w);
    if (noise_sd > 0.0) y(i) += noise_sd * gauss(rng);
  }
  std::string name = "synth_n" + std::to_string(n) + "_d" + std::to_string(d) +
                     "_s" + std::to_string(seed);
  return {Dataset(std::move(x), std::move(y), std::move(name)), std::move(w)};
}

}  // namespace sgmv
