#include "repscore/repstore.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace repscore {

namespace {

constexpr std::array<char, 4> kRepbMagic = {'R', 'E', 'P', 'B'};
constexpr std::uint32_t kRepbVersion = 1;

template <typename T>
T to_little_endian(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

template <typename T>
void write_le(std::ostream& os, T v) {
  const T le = to_little_endian(v);
  os.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(ErrorCode::ParseError, "truncated repb file " + path.string());
  }
  return to_little_endian(v);
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Matrix parse_csv_matrix(std::istream& is, const std::filesystem::path& path) {
  std::vector<double> values;
  Eigen::Index cols = -1;
  Eigen::Index rows = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (is_blank(line) || trim(line).front() == '#') continue;
    const auto cells = split_csv_line(line);
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(cells.size());
    } else if (static_cast<Eigen::Index>(cells.size()) != cols) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) +
                                             ": expected " + std::to_string(cols) +
                                             " columns, got " + std::to_string(cells.size()));
    }
    for (const auto& cell : cells) {
      double v = 0.0;
      try {
        v = parse_double(cell);
      } catch (const Error& e) {
        throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0 || cols <= 0) {
    throw Error(ErrorCode::EmptyMatrix, "no data rows in " + path.string());
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

Matrix parse_repb_matrix(std::istream& is, const std::filesystem::path& path) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size())) {
    throw Error(ErrorCode::EmptyMatrix, "empty repb file " + path.string());
  }
  if (magic != kRepbMagic) throw Error(ErrorCode::ParseError, "bad magic in " + path.string());
  const auto version = read_le<std::uint32_t>(is, path);
  if (version != kRepbVersion) {
    throw Error(ErrorCode::ParseError, "unsupported repb version " + std::to_string(version));
  }
  const auto rows = read_le<std::uint64_t>(is, path);
  const auto cols = read_le<std::uint64_t>(is, path);
  if (rows == 0 || cols == 0) throw Error(ErrorCode::EmptyMatrix, "zero-sized matrix in " + path.string());
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t i = 0; i < rows; ++i)
    for (std::uint64_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = read_le<double>(is, path);
  if (is.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::ParseError, "trailing bytes in " + path.string());
  }
  return m;
}

void require_finite(const Matrix& m, const std::string& what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j))) {
        throw Error(ErrorCode::NonFiniteValue, what + " entry (" + std::to_string(i) + ", " +
                                                   std::to_string(j) + ") is not finite");
      }
}

std::ofstream open_for_write(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream os(path, mode);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_for_read(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream is(path, mode);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return is;
}

int parse_int(std::string_view token, const std::string& where) {
  token = trim(token);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw Error(ErrorCode::ParseError, where + ": bad integer '" + std::string(token) + "'");
  }
  return v;
}

}  // namespace

RepresentationMatrix::RepresentationMatrix(Matrix data, std::vector<std::string> sample_ids)
    : data_(std::move(data)), sample_ids_(std::move(sample_ids)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw Error(ErrorCode::EmptyMatrix, "representation matrix must be at least 1x1");
  }
  require_finite(data_, "representation");
  if (!sample_ids_.empty() && static_cast<Eigen::Index>(sample_ids_.size()) != data_.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "sample_ids length does not match row count");
  }
}

std::string RepresentationMatrix::sample_id(Eigen::Index i) const {
  if (sample_ids_.empty()) return std::to_string(i);
  return sample_ids_[static_cast<std::size_t>(i)];
}

ProjectionMatrix::ProjectionMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw Error(ErrorCode::EmptyMatrix, "projection matrix must be at least 1x1");
  }
  require_finite(data_, "projection");
  for (Eigen::Index i = 0; i < data_.rows(); ++i) {
    if ((data_.row(i).array() == 0.0).all()) {
      throw Error(ErrorCode::ZeroNormEmbedding, "projection row " + std::to_string(i) + " is zero");
    }
  }
}

void LabelSet::validate(std::size_t n_samples) const {
  if (class_labels.size() != n_samples) {
    throw Error(ErrorCode::ShapeMismatch, "label count " + std::to_string(class_labels.size()) +
                                              " != sample count " + std::to_string(n_samples));
  }
  if (!sample_ids.empty() && sample_ids.size() != n_samples) {
    throw Error(ErrorCode::ShapeMismatch, "sample_id count does not match labels");
  }
  for (int c : class_labels)
    if (c < 0) throw Error(ErrorCode::InvalidConfig, "negative class id " + std::to_string(c));
  if (predicted_labels) {
    if (predicted_labels->size() != n_samples)
      throw Error(ErrorCode::ShapeMismatch, "predicted label count mismatch");
    for (int c : *predicted_labels)
      if (c < 0) throw Error(ErrorCode::InvalidConfig, "negative predicted id " + std::to_string(c));
  }
  if (correctness) {
    if (correctness->size() != n_samples)
      throw Error(ErrorCode::ShapeMismatch, "correctness count mismatch");
    if (predicted_labels) {
      for (std::size_t i = 0; i < n_samples; ++i)
        if ((*correctness)[i] != ((*predicted_labels)[i] == class_labels[i]))
          throw Error(ErrorCode::InvalidConfig,
                      "correctness flag disagrees with labels at row " + std::to_string(i));
    }
  }
}

std::vector<bool> LabelSet::resolved_correctness() const {
  if (correctness) return *correctness;
  if (predicted_labels) {
    std::vector<bool> out(class_labels.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*predicted_labels)[i] == class_labels[i];
    return out;
  }
  throw Error(ErrorCode::MissingCorrectness, "labels carry neither predictions nor correctness");
}

MatrixFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".repb" ? MatrixFormat::Repb : MatrixFormat::Csv;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw Error(ErrorCode::IoError, "cannot format double");
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view token) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ptr != token.data() + token.size() ||
      (ec != std::errc{} && ec != std::errc::result_out_of_range)) {
    throw Error(ErrorCode::ParseError, "bad number '" + std::string(token) + "'");
  }
  if (ec == std::errc::result_out_of_range) {
    // from_chars leaves v untouched here; strtod reports overflow as HUGE_VAL
    // and gradual underflow as a (sub)normal.
    v = std::strtod(std::string(token).c_str(), nullptr);
  }
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::NonFiniteValue, "non-finite value '" + std::string(token) + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

Matrix load_raw_matrix(const std::filesystem::path& path, MatrixFormat format) {
  if (format == MatrixFormat::Repb) {
    auto is = open_for_read(path, std::ios::binary);
    return parse_repb_matrix(is, path);
  }
  auto is = open_for_read(path, std::ios::in);
  return parse_csv_matrix(is, path);
}

void save_raw_matrix(const Matrix& m, const std::filesystem::path& path, MatrixFormat format) {
  if (format == MatrixFormat::Repb) {
    auto os = open_for_write(path, std::ios::binary | std::ios::trunc);
    os.write(kRepbMagic.data(), kRepbMagic.size());
    write_le<std::uint32_t>(os, kRepbVersion);
    write_le<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
    write_le<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) write_le<double>(os, m(i, j));
    if (!os) throw Error(ErrorCode::IoError, "write failed for " + path.string());
    return;
  }
  auto os = open_for_write(path, std::ios::out | std::ios::trunc);
  std::string line;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) line += ',';
      line += format_double(m(i, j));
    }
    line += '\n';
    os << line;
  }
  if (!os) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

RepresentationMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  return RepresentationMatrix(load_raw_matrix(path, format));
}

RepresentationMatrix load_matrix(const std::filesystem::path& path) {
  return load_matrix(path, format_from_path(path));
}

void save_matrix(const RepresentationMatrix& m, const std::filesystem::path& path,
                 MatrixFormat format) {
  save_raw_matrix(m.data(), path, format);
}

void save_matrix(const RepresentationMatrix& m, const std::filesystem::path& path) {
  save_matrix(m, path, format_from_path(path));
}

LabelSet load_labels(const std::filesystem::path& path) {
  auto is = open_for_read(path, std::ios::in);
  LabelSet labels;
  std::vector<int> predicted;
  std::size_t width = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto t = trim(line);
    if (t.front() == '#' || t.starts_with("sample_id")) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (cells.size() != 2 && cells.size() != 3)
      throw Error(ErrorCode::ParseError, where + ": expected 2 or 3 columns");
    if (width == 0) width = cells.size();
    if (cells.size() != width) throw Error(ErrorCode::ParseError, where + ": ragged label row");
    labels.sample_ids.push_back(cells[0]);
    labels.class_labels.push_back(parse_int(cells[1], where));
    if (width == 3) predicted.push_back(parse_int(cells[2], where));
  }
  if (labels.class_labels.empty()) throw Error(ErrorCode::EmptyMatrix, "no labels in " + path.string());
  if (width == 3) labels.predicted_labels = std::move(predicted);
  labels.validate(labels.class_labels.size());
  return labels;
}

void save_labels(const LabelSet& labels, const std::filesystem::path& path) {
  labels.validate(labels.size());
  auto os = open_for_write(path, std::ios::out | std::ios::trunc);
  os << (labels.predicted_labels ? "# sample_id,class_label,predicted_label\n"
                                 : "# sample_id,class_label\n");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    os << (labels.sample_ids.empty() ? std::to_string(i) : labels.sample_ids[i]) << ','
       << labels.class_labels[i];
    if (labels.predicted_labels) os << ',' << (*labels.predicted_labels)[i];
    os << '\n';
  }
  if (!os) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace repscore
