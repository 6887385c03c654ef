#include "repscore/eval.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace repscore {

namespace {

struct Sweep {
  // Cumulative (tp, fp) after each tie group, plus the group's score.
  std::vector<std::size_t> tp, fp;
  std::vector<double> threshold;
  std::size_t n_pos = 0, n_neg = 0;
};

Sweep sweep(const Eigen::Ref<const Vector>& scores, const std::vector<bool>& correct) {
  if (static_cast<std::size_t>(scores.size()) != correct.size())
    throw Error(ErrorCode::ShapeMismatch, "scores and correctness differ in length");
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    if (!std::isfinite(scores[i])) throw Error(ErrorCode::NonFiniteValue, "non-finite score");

  std::vector<std::size_t> order(correct.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
  });

  Sweep s;
  s.n_pos = static_cast<std::size_t>(std::count(correct.begin(), correct.end(), true));
  s.n_neg = correct.size() - s.n_pos;
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double t = scores[static_cast<Eigen::Index>(order[k])];
    while (k < order.size() && scores[static_cast<Eigen::Index>(order[k])] == t) {
      (correct[order[k]] ? tp : fp) += 1;
      ++k;
    }
    s.tp.push_back(tp);
    s.fp.push_back(fp);
    s.threshold.push_back(t);
  }
  return s;
}

}  // namespace

CurveResult roc_curve(const Eigen::Ref<const Vector>& scores, const std::vector<bool>& correctness) {
  const Sweep s = sweep(scores, correctness);
  if (s.n_pos == 0 || s.n_neg == 0)
    throw Error(ErrorCode::OneClassOnly, "ROC needs both correct and incorrect samples");

  CurveResult out;
  out.kind = CurveKind::Roc;
  out.n_positive = s.n_pos;
  out.n_negative = s.n_neg;
  out.points.push_back({0.0, 0.0});
  const double P = static_cast<double>(s.n_pos);
  const double N = static_cast<double>(s.n_neg);
  for (std::size_t k = 0; k < s.tp.size(); ++k) {
    const CurvePoint& prev = out.points.back();
    CurvePoint p{static_cast<double>(s.fp[k]) / N, static_cast<double>(s.tp[k]) / P, s.threshold[k]};
    out.area += (p.x - prev.x) * (p.y + prev.y) * 0.5;
    out.points.push_back(p);
  }
  return out;
}

CurveResult pr_curve(const Eigen::Ref<const Vector>& scores, const std::vector<bool>& correctness) {
  const Sweep s = sweep(scores, correctness);
  if (s.n_pos == 0) throw Error(ErrorCode::NoPositives, "PR curve needs at least one correct sample");

  CurveResult out;
  out.kind = CurveKind::Pr;
  out.n_positive = s.n_pos;
  out.n_negative = s.n_neg;
  const double P = static_cast<double>(s.n_pos);
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < s.tp.size(); ++k) {
    const double tp = static_cast<double>(s.tp[k]);
    const double recall = tp / P;
    const double precision = tp / static_cast<double>(s.tp[k] + s.fp[k]);
    out.area += (recall - prev_recall) * precision;
    prev_recall = recall;
    out.points.push_back({recall, precision, s.threshold[k]});
  }
  return out;
}

std::string_view metric_name(MetricId id) {
  switch (id) {
    case MetricId::Mean: return "mean";
    case MetricId::Std: return "std";
    case MetricId::SoftSparsity: return "soft_sparsity";
    case MetricId::L1Norm: return "l1_norm";
    case MetricId::ZscoreMax: return "zscore_max";
    case MetricId::QScore: return "q_score";
  }
  return "";
}

std::optional<MetricId> metric_from_name(std::string_view name) {
  for (MetricId id : kAllMetrics)
    if (metric_name(id) == name) return id;
  return std::nullopt;
}

bool higher_is_correct(MetricId id) {
  switch (id) {
    case MetricId::Mean:
    case MetricId::Std:
    case MetricId::L1Norm:
      return false;
    default:
      return true;
  }
}

MetricScores oriented_scores(const QualityReport& report, const std::vector<bool>& correctness,
                             MetricId id) {
  if (report.size() != correctness.size())
    throw Error(ErrorCode::ShapeMismatch, "report and correctness differ in length");
  std::vector<double> values;
  MetricScores out;
  for (std::size_t i = 0; i < report.size(); ++i) {
    const QualityRecord& r = report.records[i];
    if (r.flag != QualityFlag::Ok) continue;
    double v = 0.0;
    switch (id) {
      case MetricId::Mean: v = r.mean; break;
      case MetricId::Std: v = r.std_dev; break;
      case MetricId::SoftSparsity: v = r.soft_sparsity; break;
      case MetricId::L1Norm: v = r.l1_norm; break;
      case MetricId::ZscoreMax: v = *r.zscore_max; break;
      case MetricId::QScore: v = *r.q_score; break;
    }
    values.push_back(higher_is_correct(id) ? v : -v);
    out.correct.push_back(correctness[i]);
    out.rows.push_back(i);
  }
  out.scores = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  return out;
}

std::vector<MetricAuc> metric_benchmark(const QualityReport& report,
                                        const std::vector<bool>& correctness) {
  std::vector<MetricAuc> table;
  for (MetricId id : kAllMetrics) {
    const MetricScores ms = oriented_scores(report, correctness, id);
    MetricAuc row{id};
    row.auroc = roc_curve(ms.scores, ms.correct).area;
    row.auprc = pr_curve(ms.scores, ms.correct).area;
    row.n_used = ms.correct.size();
    row.prevalence = static_cast<double>(std::count(ms.correct.begin(), ms.correct.end(), true)) /
                     static_cast<double>(row.n_used);
    table.push_back(row);
  }
  return table;
}

std::vector<ClassProfile> class_profiles(const RepresentationMatrix& m, const LabelSet& labels) {
  labels.validate(static_cast<std::size_t>(m.n_samples()));
  const std::vector<bool> correct = labels.resolved_correctness();
  const Eigen::Index l = m.n_features();

  struct Acc {
    Vector sum_all, sum_correct, sum_incorrect;
    std::size_t n_correct = 0, n_incorrect = 0;
  };
  std::map<int, Acc> groups;
  for (Eigen::Index i = 0; i < m.n_samples(); ++i) {
    Acc& a = groups[labels.class_labels[static_cast<std::size_t>(i)]];
    if (a.sum_all.size() == 0) {
      a.sum_all = a.sum_correct = a.sum_incorrect = Vector::Zero(l);
    }
    a.sum_all += m.row(i).transpose();
    if (correct[static_cast<std::size_t>(i)]) {
      a.sum_correct += m.row(i).transpose();
      ++a.n_correct;
    } else {
      a.sum_incorrect += m.row(i).transpose();
      ++a.n_incorrect;
    }
  }

  std::vector<ClassProfile> out;
  for (const auto& [cls, a] : groups) {
    ClassProfile p;
    p.class_id = cls;
    p.n_correct = a.n_correct;
    p.n_incorrect = a.n_incorrect;
    const double n = static_cast<double>(a.n_correct + a.n_incorrect);
    p.mean_all = a.sum_all / n;
    if (a.n_correct > 0) p.mean_correct = Vector(a.sum_correct / static_cast<double>(a.n_correct));
    if (a.n_incorrect > 0)
      p.mean_incorrect = Vector(a.sum_incorrect / static_cast<double>(a.n_incorrect));
    p.accuracy = static_cast<double>(a.n_correct) / n;
    out.push_back(std::move(p));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ClassProfile& a, const ClassProfile& b) { return a.accuracy > b.accuracy; });
  return out;
}

Matrix sorted_feature_profile(const std::vector<ClassProfile>& profiles) {
  if (profiles.empty()) throw Error(ErrorCode::EmptyProfile, "no class profiles");
  const Eigen::Index l = profiles.front().mean_all.size();
  Matrix out(static_cast<Eigen::Index>(profiles.size()), l);
  for (std::size_t r = 0; r < profiles.size(); ++r) {
    const Vector& v = profiles[r].mean_all;
    if (v.size() != l) throw Error(ErrorCode::ShapeMismatch, "profiles differ in feature count");
    std::vector<double> row(v.data(), v.data() + l);
    std::stable_sort(row.begin(), row.end(),
                     [](double a, double b) { return std::abs(a) > std::abs(b); });
    for (Eigen::Index j = 0; j < l; ++j) out(static_cast<Eigen::Index>(r), j) = row[static_cast<std::size_t>(j)];
  }
  return out;
}

Vector exact_sparsity(const RepresentationMatrix& m, double eps_zero) {
  if (!(eps_zero >= 0.0)) throw Error(ErrorCode::InvalidConfig, "eps_zero must be >= 0");
  Vector out(m.n_samples());
  for (Eigen::Index i = 0; i < m.n_samples(); ++i) {
    out[i] = static_cast<double>((m.row(i).array().abs() <= eps_zero).count()) /
             static_cast<double>(m.n_features());
  }
  return out;
}

}  // namespace repscore
