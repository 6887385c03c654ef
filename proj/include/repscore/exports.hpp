#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "repscore/eval.hpp"

namespace repscore {

// Curve as "x,y" lines under a one-line header.
void write_curve_csv(const CurveResult& curve, const std::filesystem::path& path);

struct NamedCurve {
  std::string label;
  CurveResult curve;
};

// Self-contained SVG line plot of one or more curves on the unit square.
void write_curves_svg(const std::vector<NamedCurve>& curves, const std::string& title,
                      const std::filesystem::path& path);

nlohmann::json benchmark_to_json(const std::vector<MetricAuc>& table);
void write_benchmark_csv(const std::vector<MetricAuc>& table, const std::filesystem::path& path);

// class_id,accuracy,n_correct,n_incorrect,subset,f0..f{l-1}; subset is
// all/correct/incorrect, empty subsets are omitted.
void write_class_profiles_csv(const std::vector<ClassProfile>& profiles,
                              const std::filesystem::path& path);

// Per-sample metric values with correctness, for scatter plots.
void write_scatter_csv(const QualityReport& report, const std::vector<bool>& correctness,
                       const std::filesystem::path& path);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace repscore
