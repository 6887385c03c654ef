#include "repscore/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "repscore/metrics.hpp"

namespace repscore {

namespace {

// Number of items a percentile policy selects out of n.
std::size_t percentile_count(double fraction_percent, std::size_t n) {
  const double raw = fraction_percent * static_cast<double>(n) / 100.0;
  // Guard against 2.0000000000000004 style round-up.
  return std::min(n, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

void check_percentile(const ThresholdPolicy& p, const char* name) {
  if (p.kind == ThresholdPolicy::Kind::Percentile && !(p.value > 0.0 && p.value < 100.0))
    throw Error(ErrorCode::InvalidConfig, std::string(name) + " percentile must lie in (0, 100)");
  if (p.kind == ThresholdPolicy::Kind::Absolute && !std::isfinite(p.value))
    throw Error(ErrorCode::InvalidConfig, std::string(name) + " threshold must be finite");
}

}  // namespace

void LossConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::InvalidConfig, "tau must be > 0");
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1))
    throw Error(ErrorCode::InvalidConfig, "lambda1 must be finite and >= 0");
  if (!(lambda2 >= 0.0) || !std::isfinite(lambda2))
    throw Error(ErrorCode::InvalidConfig, "lambda2 must be finite and >= 0");
  if (!(eta > 0.0 && eta < 1.0)) throw Error(ErrorCode::InvalidEta, "eta must lie in (0, 1)");
  check_percentile(alpha, "alpha");
  check_percentile(beta, "beta");
}

void to_json(nlohmann::json& j, const ThresholdPolicy& p) {
  j = {{p.kind == ThresholdPolicy::Kind::Absolute ? "absolute" : "percentile", p.value}};
}

void from_json(const nlohmann::json& j, ThresholdPolicy& p) {
  if (j.contains("absolute")) {
    p = ThresholdPolicy::absolute(j.at("absolute").get<double>());
  } else if (j.contains("percentile")) {
    p = ThresholdPolicy::percentile(j.at("percentile").get<double>());
  } else {
    throw Error(ErrorCode::InvalidConfig, "threshold policy needs 'absolute' or 'percentile'");
  }
}

void to_json(nlohmann::json& j, const LossConfig& c) {
  j = {{"tau", c.tau},     {"lambda1", c.lambda1}, {"lambda2", c.lambda2},
       {"alpha", c.alpha}, {"beta", c.beta},       {"eta", c.eta}};
}

void from_json(const nlohmann::json& j, LossConfig& c) {
  c.tau = j.value("tau", c.tau);
  c.lambda1 = j.value("lambda1", c.lambda1);
  c.lambda2 = j.value("lambda2", c.lambda2);
  c.alpha = j.contains("alpha") ? j.at("alpha").get<ThresholdPolicy>() : c.alpha;
  c.beta = j.contains("beta") ? j.at("beta").get<ThresholdPolicy>() : c.beta;
  c.eta = j.value("eta", c.eta);
}

double scaled_cosine_similarity(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                                double tau) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "embedding lengths differ");
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidConfig, "tau must be > 0");
  const double na = a.norm(), nb = b.norm();
  if (na < kNormFloor || nb < kNormFloor)
    throw Error(ErrorCode::ZeroNormEmbedding, "embedding norm below floor");
  return a.dot(b) / (na * nb) / tau;
}

ContrastiveResult nt_xent(const Eigen::Ref<const Matrix>& z, double tau, bool with_grad) {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidConfig, "tau must be > 0");
  const Eigen::Index rows = z.rows();
  if (rows < 4 || rows % 2 != 0)
    throw Error(ErrorCode::TooFewSamples, "NT-Xent needs an even number of rows, at least 4");
  const Eigen::Index n = rows / 2;

  const Vector norms = z.rowwise().norm();
  if (norms.minCoeff() < kNormFloor)
    throw Error(ErrorCode::ZeroNormEmbedding, "projection norm below floor");
  const Matrix u = norms.cwiseInverse().asDiagonal() * z;
  const Matrix sim = (u * u.transpose()) / tau;

  ContrastiveResult out;
  Matrix weights;  // dloss/dsim
  if (with_grad) weights = Matrix::Zero(rows, rows);
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::Index pos = (i + n) % rows;
    double row_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < rows; ++j)
      if (j != i) row_max = std::max(row_max, sim(i, j));
    double denom = 0.0;
    for (Eigen::Index j = 0; j < rows; ++j)
      if (j != i) denom += std::exp(sim(i, j) - row_max);
    const double lse = row_max + std::log(denom);
    out.loss += (lse - sim(i, pos)) * inv_rows;
    if (with_grad) {
      for (Eigen::Index j = 0; j < rows; ++j)
        if (j != i) weights(i, j) = std::exp(sim(i, j) - lse) * inv_rows;
      weights(i, pos) -= inv_rows;
    }
  }

  if (with_grad) {
    const Matrix du = ((weights + weights.transpose()) * u) / tau;
    out.grad.resize(rows, z.cols());
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double radial = du.row(i).dot(u.row(i));
      out.grad.row(i) = (du.row(i) - radial * u.row(i)) / norms[i];
    }
  }
  return out;
}

double nt_xent_loss(const ProjectionMatrix& z, double tau) { return nt_xent(z.data(), tau).loss; }

QRegResult q_regularizer(const Eigen::Ref<const Matrix>& h, const LossConfig& cfg,
                         const std::vector<bool>* frozen_mask) {
  const auto rows = static_cast<std::size_t>(h.rows());
  QRegResult out;
  out.q = Vector::Constant(h.rows(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> valid;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    try {
      out.q[i] = q_score(h.row(i));
      valid.push_back(static_cast<std::size_t>(i));
    } catch (const Error&) {
      // undefined Q: never selected
    }
  }

  out.mask.assign(rows, false);
  if (frozen_mask) {
    if (frozen_mask->size() != rows) throw Error(ErrorCode::ShapeMismatch, "frozen q mask length");
    for (std::size_t i : valid) out.mask[i] = (*frozen_mask)[i];
    out.alpha = std::numeric_limits<double>::quiet_NaN();
  } else if (cfg.alpha.kind == ThresholdPolicy::Kind::Absolute) {
    out.alpha = cfg.alpha.value;
    for (std::size_t i : valid) out.mask[i] = out.q[static_cast<Eigen::Index>(i)] < out.alpha;
  } else {
    std::vector<std::size_t> order = valid;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return out.q[static_cast<Eigen::Index>(a)] < out.q[static_cast<Eigen::Index>(b)];
    });
    const std::size_t k = percentile_count(cfg.alpha.value, order.size());
    for (std::size_t r = 0; r < k; ++r) out.mask[order[r]] = true;
    out.alpha = k < order.size() ? out.q[static_cast<Eigen::Index>(order[k])]
                                 : std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = 0; i < rows; ++i)
    if (out.mask[i]) out.value += out.q[static_cast<Eigen::Index>(i)];
  return out;
}

Matrix q_regularizer_grad(const Eigen::Ref<const Matrix>& h, const std::vector<bool>& mask) {
  Matrix g = Matrix::Zero(h.rows(), h.cols());
  const double l = static_cast<double>(h.cols());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const auto v = h.row(i);
    const double mu = v.mean();
    const double sigma = std::sqrt((v.array() - mu).square().sum() / l);
    Eigen::Index top = 0;
    const double hi = v.maxCoeff(&top);
    const double z = (hi - mu) / sigma;
    const double norm = v.lpNorm<1>();

    // dz/dv_j = (e_top - 1/l) / sigma - (hi - mu) / sigma^2 * (v_j - mu) / (l sigma)
    Eigen::RowVectorXd dz =
        Eigen::RowVectorXd::Constant(h.cols(), -1.0 / (l * sigma)) -
        ((v.array() - mu) * ((hi - mu) / (sigma * sigma * sigma * l))).matrix();
    dz[top] += 1.0 / sigma;
    const Eigen::RowVectorXd sign = v.array().sign().matrix();
    g.row(i) = dz / norm - (z / (norm * norm)) * sign;
  }
  return g;
}

ColumnPenaltyResult column_penalty(const Eigen::Ref<const Matrix>& h, const LossConfig& cfg,
                                   double norm_scale, const std::vector<bool>* frozen_mask) {
  if (h.rows() < 1 || h.cols() < 1) throw Error(ErrorCode::EmptyMatrix, "empty representation batch");
  const auto cols = static_cast<std::size_t>(h.cols());
  ColumnPenaltyResult out;
  out.column_norms = h.cwiseAbs().colwise().sum().transpose();
  out.mask.assign(cols, false);
  if (frozen_mask) {
    if (frozen_mask->size() != cols) throw Error(ErrorCode::ShapeMismatch, "frozen column mask length");
    out.mask = *frozen_mask;
    out.beta = std::numeric_limits<double>::quiet_NaN();
  } else if (cfg.beta.kind == ThresholdPolicy::Kind::Absolute) {
    out.beta = cfg.beta.value;
    for (std::size_t k = 0; k < cols; ++k)
      out.mask[k] = norm_scale * out.column_norms[static_cast<Eigen::Index>(k)] > out.beta;
  } else {
    std::vector<std::size_t> order(cols);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return out.column_norms[static_cast<Eigen::Index>(a)] > out.column_norms[static_cast<Eigen::Index>(b)];
    });
    const std::size_t k = percentile_count(100.0 - cfg.beta.value, cols);
    for (std::size_t r = 0; r < k; ++r) out.mask[order[r]] = true;
    out.beta = k < cols ? norm_scale * out.column_norms[static_cast<Eigen::Index>(order[k])] : 0.0;
  }
  for (std::size_t k = 0; k < cols; ++k)
    if (out.mask[k]) out.value += out.column_norms[static_cast<Eigen::Index>(k)];
  return out;
}

Matrix column_penalty_grad(const Eigen::Ref<const Matrix>& h, const std::vector<bool>& mask) {
  Matrix g = Matrix::Zero(h.rows(), h.cols());
  for (Eigen::Index k = 0; k < h.cols(); ++k)
    if (mask[static_cast<std::size_t>(k)]) g.col(k) = h.col(k).array().sign().matrix();
  return g;
}

LossBreakdown total_loss(const Eigen::Ref<const Matrix>& z1, const Eigen::Ref<const Matrix>& z2,
                         const Eigen::Ref<const Matrix>& h, const LossConfig& cfg, double norm_scale,
                         const FrozenMasks* frozen, LossGradients* grads, unsigned terms) {
  cfg.validate();
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols())
    throw Error(ErrorCode::ShapeMismatch, "view projections differ in shape");
  if (h.rows() != 2 * z1.rows())
    throw Error(ErrorCode::ShapeMismatch, "representation rows must equal both views' rows");

  Matrix z(2 * z1.rows(), z1.cols());
  z << z1, z2;
  const bool want = grads != nullptr;
  ContrastiveResult con = nt_xent(z, cfg.tau, want && (terms & kContrastiveTerm));
  const QRegResult q = q_regularizer(h, cfg, frozen ? &frozen->q_mask : nullptr);
  const ColumnPenaltyResult col = column_penalty(h, cfg, norm_scale, frozen ? &frozen->column_mask : nullptr);

  // Both regularizers are averaged over the 2N representation rows, like the
  // contrastive term.
  const double rows = static_cast<double>(h.rows());
  LossBreakdown out;
  out.contrastive = con.loss;
  out.q_reg = q.value / rows;
  out.column_penalty = col.value / rows;
  out.total = con.loss - cfg.lambda1 * out.q_reg + cfg.lambda2 * out.column_penalty;
  out.q_mask = q.mask;
  out.column_mask = col.mask;
  out.alpha = q.alpha;
  out.beta = col.beta;

  if (want) {
    grads->dz = (terms & kContrastiveTerm) ? std::move(con.grad) : Matrix::Zero(z.rows(), z.cols());
    grads->dh = Matrix::Zero(h.rows(), h.cols());
    if ((terms & kQRegTerm) && cfg.lambda1 != 0.0) grads->dh -= (cfg.lambda1 / rows) * q_regularizer_grad(h, q.mask);
    if ((terms & kColumnTerm) && cfg.lambda2 != 0.0)
      grads->dh += (cfg.lambda2 / rows) * column_penalty_grad(h, col.mask);
  }
  return out;
}

}  // namespace repscore
