#include "repscore/saliency.hpp"

#include <cmath>
#include <fstream>

namespace repscore {

Vector feature_gradient(const EncoderParams& p, const Eigen::Ref<const Vector>& sample, Eigen::Index k) {
  if (k < 0 || k >= p.representation_size())
    throw Error(ErrorCode::IndexOutOfRange, "feature " + std::to_string(k) + " outside representation of size " +
                                                std::to_string(p.representation_size()));
  Vector unit = Vector::Zero(p.representation_size());
  unit[k] = 1.0;
  return input_gradient(p, sample, unit);
}

SaliencyMap normalize_saliency(const Eigen::Ref<const Vector>& raw) {
  if (!raw.allFinite()) throw Error(ErrorCode::NonFiniteValue, "saliency gradient is not finite");
  SaliencyMap map;
  map.values = raw.cwiseAbs();
  const double peak = raw.size() ? map.values.maxCoeff() : 0.0;
  if (peak > 0.0) map.values /= peak;
  return map;
}

Eigen::Index dominant_feature_index(const Eigen::Ref<const Vector>& profile) {
  if (profile.size() == 0) throw Error(ErrorCode::EmptyProfile, "empty class profile");
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < profile.size(); ++j)
    if (std::abs(profile[j]) > std::abs(profile[best])) best = j;
  return best;
}

Eigen::Index dominant_feature_index(const ClassProfile& profile) {
  if (!profile.mean_correct)
    throw Error(ErrorCode::EmptyProfile, "class " + std::to_string(profile.class_id) +
                                             " has no correctly classified samples");
  return dominant_feature_index(*profile.mean_correct);
}

std::string saliency_stem(const SaliencyMap& map) {
  return "saliency_s" + map.sample_id + "_f" + std::to_string(map.feature_index);
}

void write_saliency_pgm(const SaliencyMap& map, const std::filesystem::path& path) {
  const auto side = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(map.values.size()))));
  if (side * side != map.values.size())
    throw Error(ErrorCode::ShapeMismatch, "PGM output needs a square input length");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  os << "P5\n" << side << ' ' << side << "\n255\n";
  for (Eigen::Index i = 0; i < map.values.size(); ++i) {
    const long px = std::lround(255.0 * std::clamp(map.values[i], 0.0, 1.0));
    os.put(static_cast<char>(static_cast<unsigned char>(px)));
  }
  if (!os) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void write_saliency_csv(const SaliencyMap& map, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::out | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  os << "index,value\n";
  for (Eigen::Index i = 0; i < map.values.size(); ++i) os << i << ',' << format_double(map.values[i]) << '\n';
  if (!os) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace repscore
