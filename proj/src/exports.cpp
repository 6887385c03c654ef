#include "repscore/exports.hpp"

#include <fstream>
#include <sstream>

namespace repscore {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::out | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  return os;
}

void check(const std::ofstream& os, const std::filesystem::path& path) {
  if (!os) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

void write_curve_csv(const CurveResult& curve, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << (curve.kind == CurveKind::Roc ? "fpr,tpr\n" : "recall,precision\n");
  for (const auto& p : curve.points) os << format_double(p.x) << ',' << format_double(p.y) << '\n';
  check(os, path);
}

void write_curves_svg(const std::vector<NamedCurve>& curves, const std::string& title,
                      const std::filesystem::path& path) {
  constexpr double kSize = 400.0, kMargin = 50.0;
  const auto px = [&](double x) { return kMargin + x * kSize; };
  const auto py = [&](double y) { return kMargin + (1.0 - y) * kSize; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize + 2 * kMargin + 160
      << "\" height=\"" << kSize + 2 * kMargin << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kMargin << "\" y=\"30\" font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
  svg << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize << "\" height=\""
      << kSize << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    svg << "<text x=\"" << px(v) - 8 << "\" y=\"" << kMargin + kSize + 18
        << "\" font-family=\"sans-serif\" font-size=\"10\">" << v << "</text>\n";
    svg << "<text x=\"" << kMargin - 30 << "\" y=\"" << py(v) + 4
        << "\" font-family=\"sans-serif\" font-size=\"10\">" << v << "</text>\n";
  }
  const bool roc = !curves.empty() && curves.front().curve.kind == CurveKind::Roc;
  svg << "<text x=\"" << kMargin + kSize / 2 - 20 << "\" y=\"" << kMargin + kSize + 38
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << (roc ? "FPR" : "Recall") << "</text>\n";
  svg << "<text x=\"12\" y=\"" << kMargin + kSize / 2
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << (roc ? "TPR" : "Prec") << "</text>\n";
  if (roc) {
    svg << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
        << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4,4\"/>\n";
  }
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kPalette[c % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : curves[c].curve.points) svg << px(p.x) << ',' << py(p.y) << ' ';
    svg << "\"/>\n";
    svg << "<text x=\"" << kMargin + kSize + 10 << "\" y=\"" << kMargin + 15 + 16 * c
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">"
        << curves[c].label << " (" << curves[c].curve.area << ")</text>\n";
  }
  svg << "</svg>\n";

  auto os = open_out(path);
  os << svg.str();
  check(os, path);
}

nlohmann::json benchmark_to_json(const std::vector<MetricAuc>& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table) {
    rows.push_back({{"metric", metric_name(r.metric)},
                    {"orientation", higher_is_correct(r.metric) ? "higher" : "lower"},
                    {"auroc", r.auroc},
                    {"auprc", r.auprc},
                    {"prevalence", r.prevalence},
                    {"n_used", r.n_used}});
  }
  return rows;
}

void write_benchmark_csv(const std::vector<MetricAuc>& table, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "metric,orientation,auroc,auprc,prevalence,n_used\n";
  for (const auto& r : table) {
    os << metric_name(r.metric) << ',' << (higher_is_correct(r.metric) ? "higher" : "lower") << ','
       << format_double(r.auroc) << ',' << format_double(r.auprc) << ','
       << format_double(r.prevalence) << ',' << r.n_used << '\n';
  }
  check(os, path);
}

void write_class_profiles_csv(const std::vector<ClassProfile>& profiles,
                              const std::filesystem::path& path) {
  auto os = open_out(path);
  const Eigen::Index l = profiles.empty() ? 0 : profiles.front().mean_all.size();
  os << "class_id,accuracy,n_correct,n_incorrect,subset";
  for (Eigen::Index j = 0; j < l; ++j) os << ",f" << j;
  os << '\n';
  const auto row = [&](const ClassProfile& p, const char* subset, const Vector& v) {
    os << p.class_id << ',' << format_double(p.accuracy) << ',' << p.n_correct << ','
       << p.n_incorrect << ',' << subset;
    for (Eigen::Index j = 0; j < v.size(); ++j) os << ',' << format_double(v[j]);
    os << '\n';
  };
  for (const auto& p : profiles) {
    row(p, "all", p.mean_all);
    if (p.mean_correct) row(p, "correct", *p.mean_correct);
    if (p.mean_incorrect) row(p, "incorrect", *p.mean_incorrect);
  }
  check(os, path);
}

void write_scatter_csv(const QualityReport& report, const std::vector<bool>& correctness,
                       const std::filesystem::path& path) {
  if (report.size() != correctness.size())
    throw Error(ErrorCode::ShapeMismatch, "report and correctness differ in length");
  auto os = open_out(path);
  os << "sample_id,correct,zscore_max,l1_norm,q_score\n";
  for (std::size_t i = 0; i < report.size(); ++i) {
    const auto& r = report.records[i];
    if (r.flag != QualityFlag::Ok) continue;
    os << r.sample_id << ',' << (correctness[i] ? 1 : 0) << ',' << format_double(*r.zscore_max)
       << ',' << format_double(r.l1_norm) << ',' << format_double(*r.q_score) << '\n';
  }
  check(os, path);
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
  check(os, path);
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace repscore
