#include "repscore/probe.hpp"

#include <algorithm>
#include <set>

namespace repscore {

void to_json(nlohmann::json& j, const ProbeConfig& c) {
  j = {{"lr", c.lr}, {"max_epochs", c.max_epochs}, {"grad_tol", c.grad_tol}, {"l2", c.l2}};
}

void from_json(const nlohmann::json& j, ProbeConfig& c) {
  c.lr = j.value("lr", c.lr);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.grad_tol = j.value("grad_tol", c.grad_tol);
  c.l2 = j.value("l2", c.l2);
}

Matrix LinearProbe::logits(const Eigen::Ref<const Matrix>& h) const {
  if (h.cols() != weight.rows()) throw Error(ErrorCode::ShapeMismatch, "probe feature count mismatch");
  Matrix x = (h.rowwise() - feature_mean.transpose()).array().rowwise() /
             feature_scale.transpose().array();
  Matrix out = x * weight;
  out.rowwise() += bias.transpose();
  return out;
}

LinearProbe train_linear_probe(const Eigen::Ref<const Matrix>& h, const std::vector<int>& labels,
                               const ProbeConfig& cfg) {
  if (static_cast<std::size_t>(h.rows()) != labels.size())
    throw Error(ErrorCode::ShapeMismatch, "one label per representation required");
  if (std::set<int>(labels.begin(), labels.end()).size() < 2)
    throw Error(ErrorCode::OneClassOnly, "probe needs at least two classes");
  if (*std::min_element(labels.begin(), labels.end()) < 0)
    throw Error(ErrorCode::InvalidConfig, "negative class id");
  const Eigen::Index k = *std::max_element(labels.begin(), labels.end()) + 1;
  const Eigen::Index n = h.rows();
  const Eigen::Index l = h.cols();

  LinearProbe probe;
  probe.config = cfg;
  probe.feature_mean = h.colwise().mean().transpose();
  probe.feature_scale =
      ((h.rowwise() - probe.feature_mean.transpose()).array().square().colwise().mean().sqrt())
          .transpose();
  for (Eigen::Index j = 0; j < l; ++j)
    if (!(probe.feature_scale[j] > 1e-12)) probe.feature_scale[j] = 1.0;
  probe.weight = Matrix::Zero(l, k);
  probe.bias = Vector::Zero(k);

  const Matrix x = (h.rowwise() - probe.feature_mean.transpose()).array().rowwise() /
                   probe.feature_scale.transpose().array();
  Matrix onehot = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, labels[static_cast<std::size_t>(i)]) = 1.0;

  const double inv_n = 1.0 / static_cast<double>(n);
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Matrix logits = x * probe.weight;
    logits.rowwise() += probe.bias.transpose();
    const Vector row_max = logits.rowwise().maxCoeff();
    Matrix p = (logits.colwise() - row_max).array().exp().matrix();
    p.array().colwise() /= p.rowwise().sum().array();
    const Matrix dlogits = (p - onehot) * inv_n;
    const Matrix gw = x.transpose() * dlogits + cfg.l2 * probe.weight;
    const Vector gb = dlogits.colwise().sum().transpose();
    probe.final_grad_norm = std::sqrt(gw.squaredNorm() + gb.squaredNorm());
    probe.epochs_run = epoch;
    if (probe.final_grad_norm < cfg.grad_tol) break;
    probe.weight -= cfg.lr * gw;
    probe.bias -= cfg.lr * gb;
    probe.epochs_run = epoch + 1;
  }
  return probe;
}

ProbeEvaluation evaluate_probe(const LinearProbe& probe, const Eigen::Ref<const Matrix>& h,
                               const std::vector<int>& labels) {
  if (static_cast<std::size_t>(h.rows()) != labels.size())
    throw Error(ErrorCode::ShapeMismatch, "one label per representation required");
  const Matrix logits = probe.logits(h);
  ProbeEvaluation out;
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    out.predicted.push_back(static_cast<int>(arg));
    const bool ok = static_cast<int>(arg) == labels[static_cast<std::size_t>(i)];
    out.correct.push_back(ok);
    hits += ok ? 1 : 0;
  }
  out.accuracy = labels.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(labels.size());
  return out;
}

}  // namespace repscore
