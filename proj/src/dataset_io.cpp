#include "varchen/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <vector>

namespace varchen {

namespace {

bool valid_label(int label) { return label == -1 || label == 1 || (label >= 0 && label <= 9); }

struct Cursor {
  const std::string& file;
  const std::string& line;
  int line_no;
  std::size_t pos = 0;

  int column() const { return static_cast<int>(pos) + 1; }
  bool done() const { return pos >= line.size(); }
  void skip_spaces() {
    while (!done() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  }
  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(file, line_no, column(), message);
  }

  double parse_double(const char* what) {
    skip_spaces();
    const char* begin = line.data() + pos;
    const char* end = line.data() + line.size();
    double value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr == begin) fail(std::string("expected ") + what);
    if (!std::isfinite(value)) fail(std::string("non-finite ") + what);
    pos = static_cast<std::size_t>(ptr - line.data());
    return value;
  }

  long parse_long(const char* what) {
    skip_spaces();
    const char* begin = line.data() + pos;
    const char* end = line.data() + line.size();
    long value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr == begin) fail(std::string("expected ") + what);
    pos = static_cast<std::size_t>(ptr - line.data());
    return value;
  }
};

int parse_label(Cursor& cur) {
  const std::size_t at = cur.pos;
  const double raw = cur.parse_double("label");
  const int label = static_cast<int>(raw);
  if (static_cast<double>(label) != raw || !valid_label(label)) {
    cur.pos = at;
    cur.fail("label must be an integer in {-1,+1} or {0..9}");
  }
  return label;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, 0, "cannot open file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t') return false;
  }
  return true;
}

}  // namespace

double Dataset::row_dot(Index i, const Vector<double>& x) const {
  if (is_sparse) {
    double acc = 0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(sparse, i); it; ++it) {
      acc += it.value() * x(it.col());
    }
    return acc;
  }
  return dense.row(i).dot(x);
}

void Dataset::row_axpy(Index i, double c, Vector<double>& out) const {
  if (is_sparse) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(sparse, i); it; ++it) {
      out(it.col()) += c * it.value();
    }
  } else {
    out.noalias() += c * dense.row(i).transpose();
  }
}

void Dataset::add_row_outer(Index i, Matrix<double>& gram) const {
  if (is_sparse) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator a(sparse, i); a; ++a) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator b(sparse, i); b; ++b) {
        gram(a.col(), b.col()) += a.value() * b.value();
      }
    }
  } else {
    gram.noalias() += dense.row(i).transpose() * dense.row(i);
  }
}

void Dataset::validate() const {
  if (rows() != labels.size()) throw InvalidInput("dataset: label count mismatch");
  if (!is_sparse && !dense.allFinite()) throw InvalidInput("dataset: non-finite feature");
  if (is_sparse) {
    for (Index k = 0; k < sparse.nonZeros(); ++k) {
      if (!std::isfinite(sparse.valuePtr()[k])) throw InvalidInput("dataset: non-finite feature");
    }
  }
  for (Index i = 0; i < labels.size(); ++i) {
    if (!valid_label(labels(i))) throw InvalidInput("dataset: label outside declared set");
  }
}

Dataset load_libsvm(const std::string& path, Index dim) {
  const auto lines = read_lines(path);

  struct Row {
    int label;
    std::vector<std::pair<Index, double>> feats;
  };
  std::vector<Row> rows;
  Index max_index = dim;

  for (std::size_t li = 0; li < lines.size(); ++li) {
    if (blank_or_comment(lines[li])) continue;
    Cursor cur{path, lines[li], static_cast<int>(li) + 1};
    Row row;
    row.label = parse_label(cur);
    long prev_index = 0;
    while (true) {
      cur.skip_spaces();
      if (cur.done()) break;
      const long idx = cur.parse_long("feature index");
      if (idx < 1) cur.fail("feature index must be >= 1");
      if (idx <= prev_index) cur.fail("feature indices must be strictly increasing");
      if (cur.done() || cur.line[cur.pos] != ':') cur.fail("expected ':' after feature index");
      ++cur.pos;
      const double value = cur.parse_double("feature value");
      row.feats.emplace_back(static_cast<Index>(idx) - 1, value);
      prev_index = idx;
      max_index = std::max(max_index, static_cast<Index>(idx));
    }
    if (dim > 0 && prev_index > dim) {
      throw ParseError(path, static_cast<int>(li) + 1, 1, "feature index exceeds forced dimension");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path, 1, 1, "empty dataset");

  Dataset out;
  out.is_sparse = true;
  out.provenance = "libsvm:" + path;
  out.labels.resize(static_cast<Index>(rows.size()));
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.labels(static_cast<Index>(r)) = rows[r].label;
    for (const auto& [col, value] : rows[r].feats) {
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(col), value);
    }
  }
  out.sparse.resize(static_cast<Index>(rows.size()), max_index);
  out.sparse.setFromTriplets(triplets.begin(), triplets.end());
  out.sparse.makeCompressed();
  out.validate();
  return out;
}

Dataset load_csv(const std::string& path) {
  const auto lines = read_lines(path);

  std::vector<int> labels;
  std::vector<std::vector<double>> rows;
  Index n_cols = -1;

  for (std::size_t li = 0; li < lines.size(); ++li) {
    if (blank_or_comment(lines[li])) continue;
    Cursor cur{path, lines[li], static_cast<int>(li) + 1};
    labels.push_back(parse_label(cur));
    std::vector<double> feats;
    while (true) {
      cur.skip_spaces();
      if (cur.done()) break;
      if (cur.line[cur.pos] != ',') cur.fail("expected ','");
      ++cur.pos;
      feats.push_back(cur.parse_double("feature value"));
    }
    if (n_cols < 0) {
      n_cols = static_cast<Index>(feats.size());
      if (n_cols == 0) cur.fail("row has no features");
    } else if (static_cast<Index>(feats.size()) != n_cols) {
      cur.fail("inconsistent column count");
    }
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw ParseError(path, 1, 1, "empty dataset");

  Dataset out;
  out.provenance = "csv:" + path;
  out.labels.resize(static_cast<Index>(labels.size()));
  out.dense.resize(static_cast<Index>(rows.size()), n_cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.labels(static_cast<Index>(r)) = labels[r];
    for (Index c = 0; c < n_cols; ++c) out.dense(static_cast<Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  }
  out.validate();
  return out;
}

Dataset binarize(const Dataset& dataset, int positive_class) {
  Dataset out = dataset;
  for (Index i = 0; i < out.labels.size(); ++i) {
    out.labels(i) = dataset.labels(i) == positive_class ? 1 : -1;
  }
  out.provenance += "|one-vs-rest:" + std::to_string(positive_class);
  return out;
}

}  // namespace varchen
