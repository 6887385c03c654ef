#include "repscore/metrics.hpp"

#include <fstream>

#include "repscore/parallel.hpp"

namespace repscore {

std::string_view to_string(QualityFlag flag) {
  switch (flag) {
    case QualityFlag::Ok: return "ok";
    case QualityFlag::Degenerate: return "degenerate";
    case QualityFlag::ZeroNorm: return "zero_norm";
  }
  return "ok";
}

QualityFlag quality_flag_from_string(std::string_view s) {
  if (s == "ok") return QualityFlag::Ok;
  if (s == "degenerate") return QualityFlag::Degenerate;
  if (s == "zero_norm") return QualityFlag::ZeroNorm;
  throw Error(ErrorCode::ParseError, "unknown quality flag '" + std::string(s) + "'");
}

QualityReport batch_quality_report(const RepresentationMatrix& m, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw Error(ErrorCode::InvalidEta, "eta must lie in (0, 1)");
  if (m.n_features() < 2)
    throw Error(ErrorCode::SingleElement, "quality metrics need at least two features");

  QualityReport report;
  report.eta = eta;
  report.records.resize(static_cast<std::size_t>(m.n_samples()));
  parallel_for(report.records.size(), [&](std::size_t i) {
    const auto row = m.row(static_cast<Eigen::Index>(i));
    QualityRecord& rec = report.records[i];
    rec.sample_id = m.sample_id(static_cast<Eigen::Index>(i));
    rec.mean = mean(row);
    rec.std_dev = std_dev(row);
    rec.soft_sparsity = soft_sparsity(row, eta);
    rec.l1_norm = l1_norm(row);
    try {
      rec.q_score = q_score(row);
      rec.zscore_max = zscore_max(row);
    } catch (const Error& e) {
      rec.flag = e.code() == ErrorCode::ZeroNorm ? QualityFlag::ZeroNorm : QualityFlag::Degenerate;
      rec.q_score.reset();
      rec.zscore_max.reset();
    }
  });
  return report;
}

void save_quality_report(const QualityReport& report, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::out | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  os << "# eta=" << format_double(report.eta) << '\n';
  os << "sample_id,mean,std,soft_sparsity,l1_norm,zscore_max,q_score,flag\n";
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : report.records) {
    os << r.sample_id << ',' << format_double(r.mean) << ',' << format_double(r.std_dev) << ','
       << format_double(r.soft_sparsity) << ',' << format_double(r.l1_norm) << ','
       << opt(r.zscore_max) << ',' << opt(r.q_score) << ',' << to_string(r.flag) << '\n';
  }
  if (!os) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

QualityReport load_quality_report(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  QualityReport report;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (line.rfind("# eta=", 0) == 0) {
      report.eta = parse_double(std::string_view(line).substr(6));
      continue;
    }
    if (line.front() == '#' || line.rfind("sample_id", 0) == 0) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (cells.size() != 8) throw Error(ErrorCode::ParseError, where + ": expected 8 columns");
    try {
      QualityRecord r;
      r.sample_id = cells[0];
      r.mean = parse_double(cells[1]);
      r.std_dev = parse_double(cells[2]);
      r.soft_sparsity = parse_double(cells[3]);
      r.l1_norm = parse_double(cells[4]);
      if (!cells[5].empty()) r.zscore_max = parse_double(cells[5]);
      if (!cells[6].empty()) r.q_score = parse_double(cells[6]);
      r.flag = quality_flag_from_string(cells[7]);
      if ((r.flag == QualityFlag::Ok) != r.q_score.has_value())
        throw Error(ErrorCode::ParseError, "flag and q_score presence disagree");
      report.records.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  if (report.records.empty()) throw Error(ErrorCode::EmptyMatrix, "no records in " + path.string());
  return report;
}

}  // namespace repscore
