#include "simalign/datamodel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "simalign/error.hpp"

namespace simalign {

ParseError::ParseError(const std::string& path, std::size_t line, std::size_t column, const std::string& what)
    : Error([&] {
        std::ostringstream os;
        os << path;
        if (line > 0) os << ":" << line;
        if (column > 0) os << ":" << column;
        os << ": " << what;
        return os.str();
      }()),
      line_(line), column_(column) {}

namespace {

void require_finite(const Eigen::MatrixXd& values, const char* what) {
  for (Index j = 0; j < values.cols(); ++j) {
    for (Index i = 0; i < values.rows(); ++i) {
      if (!std::isfinite(values(i, j))) {
        std::ostringstream os;
        os << what << ": non-finite value at (" << i << ", " << j << ")";
        throw ValidationError(os.str());
      }
    }
  }
}

void require_unique(const ItemList& items, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : items) {
    if (!seen.insert(id).second) throw ValidationError(std::string(what) + ": duplicate identifier '" + id + "'");
  }
}

struct Row {
  std::size_t line = 0;
  std::vector<std::string> cells;
};

struct Table {
  std::string source;
  Row header;
  std::vector<Row> rows;
};

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool is_blank(const std::string& cell) {
  return cell.find_first_not_of(" \t") == std::string::npos;
}

Table read_table(std::istream& in, const std::string& source) {
  Table table;
  table.source = source;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    Row row{line_no, split_cells(line)};
    if (!have_header) {
      table.header = std::move(row);
      have_header = true;
    } else {
      table.rows.push_back(std::move(row));
    }
  }
  if (!have_header) throw ParseError(source, 0, 0, "empty file (missing header)");
  return table;
}

double parse_number(const Table& t, const Row& row, std::size_t col) {
  const std::string& cell = row.cells[col];
  const auto first = cell.find_first_not_of(" \t");
  const auto last = cell.find_last_not_of(" \t");
  if (first == std::string::npos) throw ParseError(t.source, row.line, col + 1, "empty numeric cell");
  const char* begin = cell.data() + first;
  const char* end = cell.data() + last + 1;
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(t.source, row.line, col + 1, "non-numeric cell '" + cell + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError(t.source, row.line, col + 1, "non-finite value '" + cell + "'");
  }
  return value;
}

void require_width(const Table& t, const Row& row, std::size_t width) {
  if (row.cells.size() != width) {
    std::ostringstream os;
    os << "ragged row: expected " << width << " cells, found " << row.cells.size();
    throw ParseError(t.source, row.line, std::min(row.cells.size(), width) + 1, os.str());
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  return out;
}

} // namespace

FeatureMatrix::FeatureMatrix(ItemList items, Eigen::MatrixXd values, std::string label,
                             std::vector<std::string> feature_names)
    : items_(std::move(items)), values_(std::move(values)), label_(std::move(label)),
      feature_names_(std::move(feature_names)) {
  if (values_.rows() < 2) throw ValidationError("FeatureMatrix: need at least 2 stimuli");
  if (values_.cols() < 1) throw ValidationError("FeatureMatrix: need at least 1 feature");
  if (static_cast<Index>(items_.size()) != values_.rows()) {
    throw ValidationError("FeatureMatrix: identifier count does not match row count");
  }
  if (feature_names_.empty()) {
    feature_names_.reserve(static_cast<std::size_t>(values_.cols()));
    for (Index k = 0; k < values_.cols(); ++k) feature_names_.push_back("f" + std::to_string(k));
  } else if (static_cast<Index>(feature_names_.size()) != values_.cols()) {
    throw ValidationError("FeatureMatrix: feature name count does not match column count");
  }
  require_finite(values_, "FeatureMatrix");
  require_unique(items_, "FeatureMatrix");
}

SimilarityMatrix::SimilarityMatrix(ItemList items, Eigen::MatrixXd values, bool has_diagonal)
    : items_(std::move(items)), values_(std::move(values)), has_diagonal_(has_diagonal) {
  if (values_.rows() != values_.cols()) throw ValidationError("SimilarityMatrix: matrix is not square");
  if (static_cast<Index>(items_.size()) != values_.rows()) {
    throw ValidationError("SimilarityMatrix: identifier count does not match matrix size");
  }
  require_finite(values_, "SimilarityMatrix");
  require_unique(items_, "SimilarityMatrix");
  for (Index i = 0; i < values_.rows(); ++i) {
    for (Index j = i + 1; j < values_.cols(); ++j) {
      if (std::abs(values_(i, j) - values_(j, i)) > kSymmetryTolerance) {
        std::ostringstream os;
        os << "SimilarityMatrix: asymmetric at (" << i << ", " << j << "): " << format_double(values_(i, j))
           << " vs " << format_double(values_(j, i));
        throw ValidationError(os.str());
      }
    }
  }
  if (!has_diagonal_) values_.diagonal().setZero();
}

PairIndex::PairIndex(Index item_count) : item_count_(item_count) {
  if (item_count < 0) throw ValidationError("PairIndex: negative item count");
  pairs_.reserve(static_cast<std::size_t>(item_count * (item_count - 1) / 2));
  for (Index i = 0; i < item_count; ++i) {
    for (Index j = i + 1; j < item_count; ++j) pairs_.emplace_back(i, j);
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

FeatureMatrix read_feature_matrix(std::istream& in, const std::string& source_name) {
  const Table t = read_table(in, source_name);
  const auto& head = t.header.cells;
  if (head.empty() || head[0] != "id") {
    throw ParseError(t.source, t.header.line, 1, "malformed header: first column must be 'id'");
  }
  if (head.size() < 2) throw ParseError(t.source, t.header.line, 2, "malformed header: no feature columns");
  const std::size_t width = head.size();

  ItemList items;
  Eigen::MatrixXd values(static_cast<Index>(t.rows.size()), static_cast<Index>(width - 1));
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const Row& row = t.rows[r];
    require_width(t, row, width);
    const std::string& id = row.cells[0];
    if (id.empty()) throw ParseError(t.source, row.line, 1, "empty identifier");
    if (auto [it, inserted] = seen.emplace(id, row.line); !inserted) {
      throw ParseError(t.source, row.line, 1,
                       "duplicate identifier '" + id + "' (first on line " + std::to_string(it->second) + ")");
    }
    items.push_back(id);
    for (std::size_t c = 1; c < width; ++c) {
      values(static_cast<Index>(r), static_cast<Index>(c - 1)) = parse_number(t, row, c);
    }
  }
  if (items.size() < 2) throw ParseError(t.source, 0, 0, "feature file needs at least 2 rows");

  std::string label = std::filesystem::path(source_name).stem().string();
  return FeatureMatrix(std::move(items), std::move(values), std::move(label),
                       std::vector<std::string>(head.begin() + 1, head.end()));
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_feature_matrix(in, path.string());
}

void write_feature_matrix(const FeatureMatrix& f, std::ostream& out) {
  out << "id";
  for (const auto& name : f.feature_names()) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < f.size(); ++i) {
    out << f.items()[static_cast<std::size_t>(i)];
    for (Index k = 0; k < f.dim(); ++k) out << ',' << format_double(f.values()(i, k));
    out << '\n';
  }
}

void write_feature_matrix(const FeatureMatrix& f, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_feature_matrix(f, out);
}

SimilarityMatrix read_similarity_matrix(std::istream& in, const std::string& source_name) {
  const Table t = read_table(in, source_name);
  const auto& head = t.header.cells;
  if (head.size() < 2) throw ParseError(t.source, t.header.line, 0, "malformed header: no identifier columns");
  const ItemList columns(head.begin() + 1, head.end());
  const std::size_t n = columns.size();
  if (t.rows.size() != n) {
    throw ParseError(t.source, 0, 0,
                     "matrix is not square: " + std::to_string(n) + " columns, " + std::to_string(t.rows.size()) +
                         " rows");
  }

  ItemList rows;
  for (const auto& row : t.rows) {
    require_width(t, row, n + 1);
    rows.push_back(row.cells[0]);
  }
  try {
    validate_alignment(columns, rows);
  } catch (const AlignmentError& e) {
    throw ParseError(t.source, 0, 0, std::string("identifier mismatch between rows and columns: ") + e.what());
  }

  // Classify blank cells: the strict lower triangle is either entirely blank
  // (upper-triangle file) or entirely filled; the diagonal likewise.
  std::size_t lower_blank = 0;
  std::size_t diag_blank = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Row& row = t.rows[i];
    for (std::size_t j = 0; j < n; ++j) {
      const bool blank = is_blank(row.cells[j + 1]);
      if (j < i && blank) ++lower_blank;
      if (j == i && blank) ++diag_blank;
      if (j > i && blank) throw ParseError(t.source, row.line, j + 2, "blank cell in upper triangle");
    }
  }
  const std::size_t lower_total = n * (n - 1) / 2;
  const bool upper_only = lower_total > 0 && lower_blank == lower_total;
  if (lower_blank != 0 && !upper_only) {
    throw ParseError(t.source, 0, 0, "lower triangle is partially blank; leave it entirely blank or fill it");
  }
  if (diag_blank != 0 && diag_blank != n) {
    throw ParseError(t.source, 0, 0, "diagonal is partially blank");
  }
  const bool has_diagonal = diag_blank == 0;

  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Row& row = t.rows[i];
    for (std::size_t j = 0; j < n; ++j) {
      if ((j < i && upper_only) || (j == i && !has_diagonal)) continue;
      values(static_cast<Index>(i), static_cast<Index>(j)) = parse_number(t, row, j + 1);
    }
  }
  if (upper_only) {
    values.triangularView<Eigen::StrictlyLower>() = values.transpose().triangularView<Eigen::StrictlyLower>();
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        const double lo = values(static_cast<Index>(i), static_cast<Index>(j));
        const double hi = values(static_cast<Index>(j), static_cast<Index>(i));
        if (std::abs(lo - hi) > SimilarityMatrix::kSymmetryTolerance) {
          throw ParseError(t.source, t.rows[i].line, j + 2,
                           "asymmetric entry: " + format_double(lo) + " vs " + format_double(hi) +
                               " (tolerance 1e-9)");
        }
      }
    }
  }
  return SimilarityMatrix(rows, std::move(values), has_diagonal);
}

SimilarityMatrix load_similarity_matrix(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_similarity_matrix(in, path.string());
}

void write_similarity_matrix(const SimilarityMatrix& s, std::ostream& out) {
  out << "id";
  for (const auto& id : s.items()) out << ',' << id;
  out << '\n';
  for (Index i = 0; i < s.size(); ++i) {
    out << s.items()[static_cast<std::size_t>(i)];
    for (Index j = 0; j < s.size(); ++j) {
      out << ',';
      if (i != j || s.has_diagonal()) out << format_double(s.values()(i, j));
    }
    out << '\n';
  }
}

void write_similarity_matrix(const SimilarityMatrix& s, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_similarity_matrix(s, out);
}

WeightVector load_weight_vector(const std::filesystem::path& path) {
  auto in = open_input(path);
  const Table t = read_table(in, path.string());
  const auto& head = t.header.cells;
  if (head.empty() || head[0] != "id" || head.size() < 2) {
    throw ParseError(t.source, t.header.line, 1, "malformed header: expected 'id,<feature names>'");
  }
  if (t.rows.size() != 1) throw ParseError(t.source, 0, 0, "weight file must contain exactly one data row");
  const Row& row = t.rows.front();
  require_width(t, row, head.size());
  WeightVector w;
  w.weights.resize(static_cast<Index>(head.size() - 1));
  for (std::size_t c = 1; c < head.size(); ++c) w.weights(static_cast<Index>(c - 1)) = parse_number(t, row, c);
  return w;
}

void write_weight_vector(const WeightVector& w, const std::vector<std::string>& feature_names,
                         const std::filesystem::path& path) {
  if (static_cast<Index>(feature_names.size()) != w.weights.size()) {
    throw ValidationError("write_weight_vector: feature name count does not match weight count");
  }
  auto out = open_output(path);
  out << "id";
  for (const auto& name : feature_names) out << ',' << name;
  out << "\nweights";
  for (Index k = 0; k < w.weights.size(); ++k) out << ',' << format_double(w.weights(k));
  out << '\n';
}

void validate_alignment(const ItemList& expected, const ItemList& actual) {
  if (expected.size() != actual.size()) {
    throw AlignmentError(AlignmentError::Kind::Length, -1,
                         "identifier length mismatch: " + std::to_string(expected.size()) + " vs " +
                             std::to_string(actual.size()));
  }
  std::ptrdiff_t first_diff = -1;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i] != actual[i]) {
      first_diff = static_cast<std::ptrdiff_t>(i);
      break;
    }
  }
  if (first_diff < 0) return;

  const std::unordered_set<std::string> lhs(expected.begin(), expected.end());
  for (const auto& id : actual) {
    if (!lhs.contains(id)) {
      throw AlignmentError(AlignmentError::Kind::Set, -1, "identifier set mismatch: '" + id + "' is unexpected");
    }
  }
  const auto i = static_cast<std::size_t>(first_diff);
  throw AlignmentError(AlignmentError::Kind::Order, first_diff,
                       "identifier order mismatch at position " + std::to_string(first_diff) + ": '" +
                           expected[i] + "' vs '" + actual[i] + "'");
}

void validate_alignment(const FeatureMatrix& f, const SimilarityMatrix& s) {
  validate_alignment(f.items(), s.items());
}

} // namespace simalign
