#include "dgbr/core.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "dgbr/error.hpp"

namespace dgbr {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kParse: return "parse-error";
    case ErrorKind::kSchema: return "schema-error";
    case ErrorKind::kShape: return "shape-error";
    case ErrorKind::kDomain: return "domain-error";
    case ErrorKind::kUnsupportedDimension: return "unsupported-dimension";
    case ErrorKind::kInvalidWeights: return "invalid-weights";
    case ErrorKind::kInvalidTrainingData: return "invalid-training-data";
    case ErrorKind::kEmptyResult: return "empty-result";
    case ErrorKind::kGenerationFailure: return "generation-failure";
    case ErrorKind::kInsufficientEnvironments: return "insufficient-environments";
    case ErrorKind::kTuningFailure: return "tuning-failure";
    case ErrorKind::kConfig: return "config-error";
    case ErrorKind::kIo: return "io-error";
  }
  return "unknown-error";
}

namespace {

bool is_binary(double v) { return v == 0.0 || v == 1.0; }

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string file_stem_for(const std::string& label) {
  std::string out = "test_";
  for (char c : label) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '-' || c == '.';
    out.push_back(keep ? c : '_');
  }
  return out;
}

}  // namespace

BinaryDataset::BinaryDataset(Matrix features, Vector outcome,
                             std::vector<std::string> feature_names)
    : features_(std::move(features)),
      outcome_(std::move(outcome)),
      names_(std::move(feature_names)) {
  if (features_.rows() < 1 || features_.cols() < 1) {
    throw Error(ErrorKind::kInvalidInput, "dataset needs n >= 1 and p >= 1");
  }
  if (outcome_.size() != features_.rows()) {
    throw Error(ErrorKind::kShape, "outcome length " +
                                       std::to_string(outcome_.size()) +
                                       " does not match " +
                                       std::to_string(features_.rows()) +
                                       " feature rows");
  }
  if (names_.empty()) names_ = default_feature_names(features_.cols());
  if (static_cast<Index>(names_.size()) != features_.cols()) {
    throw Error(ErrorKind::kShape, "feature_names has " +
                                       std::to_string(names_.size()) +
                                       " entries for " +
                                       std::to_string(features_.cols()) +
                                       " columns");
  }
  for (Index j = 0; j < features_.cols(); ++j) {
    for (Index i = 0; i < features_.rows(); ++i) {
      if (!is_binary(features_(i, j))) {
        throw Error(ErrorKind::kInvalidInput,
                    "feature entry (" + std::to_string(i) + ", " +
                        std::to_string(j) + ") is not 0 or 1");
      }
    }
  }
  for (Index i = 0; i < outcome_.size(); ++i) {
    if (!is_binary(outcome_(i))) {
      throw Error(ErrorKind::kInvalidInput,
                  "outcome entry " + std::to_string(i) + " is not 0 or 1");
    }
  }
}

BinaryDataset BinaryDataset::select_rows(std::span<const Index> rows) const {
  Matrix x(static_cast<Index>(rows.size()), p());
  Vector y(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index i = rows[r];
    if (i < 0 || i >= n()) throw Error(ErrorKind::kShape, "row index out of range");
    x.row(static_cast<Index>(r)) = features_.row(i);
    y(static_cast<Index>(r)) = outcome_(i);
  }
  return BinaryDataset(std::move(x), std::move(y), names_);
}

BinaryDataset BinaryDataset::select_columns(std::span<const Index> cols) const {
  Matrix x(n(), static_cast<Index>(cols.size()));
  std::vector<std::string> names;
  names.reserve(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const Index j = cols[c];
    if (j < 0 || j >= p()) throw Error(ErrorKind::kShape, "column index out of range");
    x.col(static_cast<Index>(c)) = features_.col(j);
    names.push_back(names_[static_cast<std::size_t>(j)]);
  }
  return BinaryDataset(std::move(x), outcome_, std::move(names));
}

bool BinaryDataset::operator==(const BinaryDataset& other) const {
  return names_ == other.names_ && features_.rows() == other.features_.rows() &&
         features_.cols() == other.features_.cols() &&
         features_ == other.features_ && outcome_ == other.outcome_;
}

std::vector<std::string> default_feature_names(Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) names.push_back("X" + std::to_string(j + 1));
  return names;
}

void StableSplit::validate(Index p) const {
  std::vector<int> seen(static_cast<std::size_t>(p), 0);
  for (const auto* block : {&stable, &noisy}) {
    for (Index j : *block) {
      if (j < 0 || j >= p) throw Error(ErrorKind::kInvalidInput, "split index out of range");
      if (seen[static_cast<std::size_t>(j)]++) {
        throw Error(ErrorKind::kInvalidInput, "split index listed twice");
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorKind::kInvalidInput, "split does not cover every column");
  }
}

void EnvironmentSuite::validate() const {
  std::set<std::string> labels;
  for (const auto& [label, data] : tests) {
    if (data.p() != train.p() || data.feature_names() != train.feature_names()) {
      throw Error(ErrorKind::kSchema,
                  "environment '" + label + "' does not share the training features");
    }
    if (!labels.insert(label).second) {
      throw Error(ErrorKind::kSchema, "duplicate environment label '" + label + "'");
    }
  }
}

Matrix binarize(const Matrix& values) {
  if (values.rows() == 0 || values.cols() == 0) {
    throw Error(ErrorKind::kInvalidInput, "cannot binarize an empty matrix");
  }
  const Eigen::RowVectorXd means = values.colwise().mean();
  Matrix out(values.rows(), values.cols());
  for (Index j = 0; j < values.cols(); ++j) {
    for (Index i = 0; i < values.rows(); ++i) {
      out(i, j) = values(i, j) >= means(j) ? 1.0 : 0.0;
    }
  }
  return out;
}

BinaryDataset overlap_filter(const BinaryDataset& data, double lo, double hi) {
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) {
    throw Error(ErrorKind::kDomain, "overlap_filter needs 0 <= lo < hi <= 1");
  }
  const Eigen::RowVectorXd freq = data.features().colwise().mean();
  std::vector<Index> keep;
  for (Index j = 0; j < data.p(); ++j) {
    if (freq(j) >= lo && freq(j) <= hi) keep.push_back(j);
  }
  if (keep.empty()) {
    throw Error(ErrorKind::kEmptyResult, "overlap_filter removed every column");
  }
  return data.select_columns(keep);
}

BinaryDataset load_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::kSchema, path.string() + ": missing header row");
  }
  auto header = split_csv_line(line);
  if (header.empty() || header.back() != "Y") {
    throw Error(ErrorKind::kSchema, path.string() + ": final column must be named \"Y\"");
  }
  if (header.size() < 2) {
    throw Error(ErrorKind::kSchema, path.string() + ": no feature columns");
  }
  const std::size_t p = header.size() - 1;
  std::vector<std::string> names(header.begin(), header.end() - 1);

  std::vector<double> cells;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto row = split_csv_line(line);
    if (row.size() != header.size()) {
      throw Error(ErrorKind::kParse, path.string() + ": line " + std::to_string(line_no) +
                                         " has " + std::to_string(row.size()) +
                                         " cells, expected " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] != "0" && row[c] != "1") {
        throw Error(ErrorKind::kParse, path.string() + ": line " + std::to_string(line_no) +
                                           ", column '" + header[c] + "': cell \"" +
                                           row[c] + "\" is not 0 or 1");
      }
      cells.push_back(row[c] == "1" ? 1.0 : 0.0);
    }
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::kSchema, path.string() + ": no data rows");

  Matrix x(static_cast<Index>(rows), static_cast<Index>(p));
  Vector y(static_cast<Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      x(static_cast<Index>(r), static_cast<Index>(c)) = cells[r * (p + 1) + c];
    }
    y(static_cast<Index>(r)) = cells[r * (p + 1) + p];
  }
  return BinaryDataset(std::move(x), std::move(y), std::move(names));
}

void save_csv(const BinaryDataset& data, const fs::path& path) {
  std::string out;
  out.reserve(static_cast<std::size_t>(data.n() * (data.p() + 1) * 2 + 64));
  for (const auto& name : data.feature_names()) {
    out += name;
    out += ',';
  }
  out += "Y\n";
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.p(); ++j) {
      out += data.features()(i, j) == 1.0 ? '1' : '0';
      out += ',';
    }
    out += data.outcome()(i) == 1.0 ? '1' : '0';
    out += '\n';
  }
  write_file_atomic(path, out);
}

EnvironmentSuite load_suite(const fs::path& where) {
  const fs::path manifest = fs::is_directory(where) ? where / "suite.json" : where;
  json doc;
  try {
    doc = json::parse(read_file(manifest));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, manifest.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("train") || !doc.contains("tests")) {
    throw Error(ErrorKind::kSchema, manifest.string() + ": manifest needs 'train' and 'tests'");
  }
  const fs::path base = manifest.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
  };

  EnvironmentSuite suite{load_csv(resolve(doc.at("train").get<std::string>())), {}, {}};
  for (const auto& entry : doc.at("tests")) {
    suite.tests.emplace_back(entry.at("label").get<std::string>(),
                             load_csv(resolve(entry.at("path").get<std::string>())));
  }
  if (doc.contains("provenance")) {
    for (const auto& [key, value] : doc.at("provenance").items()) {
      suite.provenance[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
  }
  suite.validate();
  return suite;
}

fs::path save_suite(const EnvironmentSuite& suite, const fs::path& dir) {
  suite.validate();
  fs::create_directories(dir);
  json doc;
  doc["train"] = "train.csv";
  save_csv(suite.train, dir / "train.csv");
  doc["tests"] = json::array();
  for (const auto& [label, data] : suite.tests) {
    const std::string file = file_stem_for(label) + ".csv";
    save_csv(data, dir / file);
    doc["tests"].push_back({{"label", label}, {"path", file}});
  }
  doc["provenance"] = json::object();
  for (const auto& [key, value] : suite.provenance) doc["provenance"][key] = value;
  const fs::path manifest = dir / "suite.json";
  write_file_atomic(manifest, doc.dump(2) + "\n");
  return manifest;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error(ErrorKind::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot rename into " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dgbr
