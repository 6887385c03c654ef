#include "repscore/encoder.hpp"

#include <cmath>
#include <random>
#include <string>

#include "repscore/exports.hpp"

namespace repscore {

namespace {

DenseLayer make_layer(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in)));
  DenseLayer layer{Matrix(out, in), Vector::Zero(out)};
  for (Eigen::Index j = 0; j < in; ++j)
    for (Eigen::Index i = 0; i < out; ++i) layer.weight(i, j) = dist(rng);
  return layer;
}

Matrix affine(const DenseLayer& layer, const Eigen::Ref<const Matrix>& x) {
  Matrix pre = x * layer.weight.transpose();
  pre.rowwise() += layer.bias.transpose();
  return pre;
}

Matrix relu(const Matrix& pre) { return pre.cwiseMax(0.0); }

Matrix relu_mask(const Matrix& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

void check_layers(const std::vector<DenseLayer>& layers, Eigen::Index in, const char* what) {
  if (layers.empty()) throw Error(ErrorCode::ShapeMismatch, std::string(what) + " has no layers");
  for (const auto& layer : layers) {
    if (layer.in() != in || layer.bias.size() != layer.out())
      throw Error(ErrorCode::ShapeMismatch, std::string(what) + " layer shapes do not compose");
    if (!layer.weight.allFinite() || !layer.bias.allFinite())
      throw Error(ErrorCode::NonFiniteValue, std::string(what) + " has non-finite parameters");
    in = layer.out();
  }
}

}  // namespace

void EncoderShape::validate() const {
  if (input < 1 || representation < 1 || projection < 1 || hidden < 0 || head_hidden < 0)
    throw Error(ErrorCode::InvalidConfig, "encoder dimensions must be positive");
}

Eigen::Index EncoderParams::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto* layers : {&encoder, &head})
    for (const auto& layer : *layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

void EncoderParams::validate() const {
  if (encoder.empty()) throw Error(ErrorCode::ShapeMismatch, "encoder has no layers");
  check_layers(encoder, encoder.front().in(), "encoder");
  check_layers(head, encoder.back().out(), "projection head");
}

EncoderParams init_encoder(const EncoderShape& shape, std::uint64_t seed) {
  shape.validate();
  std::mt19937_64 rng(seed);
  EncoderParams p;
  p.seed = seed;
  if (shape.hidden > 0) {
    p.encoder.push_back(make_layer(shape.input, shape.hidden, rng));
    p.encoder.push_back(make_layer(shape.hidden, shape.representation, rng));
  } else {
    p.encoder.push_back(make_layer(shape.input, shape.representation, rng));
  }
  if (shape.head_hidden > 0) {
    p.head.push_back(make_layer(shape.representation, shape.head_hidden, rng));
    p.head.push_back(make_layer(shape.head_hidden, shape.projection, rng));
  } else {
    p.head.push_back(make_layer(shape.representation, shape.projection, rng));
  }
  return p;
}

EncoderParams zeros_like(const EncoderParams& p) {
  EncoderParams z = p;
  for (auto* layers : {&z.encoder, &z.head})
    for (auto& layer : *layers) {
      layer.weight.setZero();
      layer.bias.setZero();
    }
  return z;
}

Vector flatten(const EncoderParams& p) {
  Vector flat(p.parameter_count());
  Eigen::Index at = 0;
  for (const auto* layers : {&p.encoder, &p.head})
    for (const auto& layer : *layers) {
      flat.segment(at, layer.weight.size()) = layer.weight.reshaped();
      at += layer.weight.size();
      flat.segment(at, layer.bias.size()) = layer.bias;
      at += layer.bias.size();
    }
  return flat;
}

void unflatten(const Eigen::Ref<const Vector>& flat, EncoderParams& p) {
  if (flat.size() != p.parameter_count())
    throw Error(ErrorCode::ShapeMismatch, "flat parameter vector has wrong length");
  Eigen::Index at = 0;
  for (auto* layers : {&p.encoder, &p.head})
    for (auto& layer : *layers) {
      layer.weight.reshaped() = flat.segment(at, layer.weight.size());
      at += layer.weight.size();
      layer.bias = flat.segment(at, layer.bias.size());
      at += layer.bias.size();
    }
}

ForwardCache forward(const EncoderParams& p, const Eigen::Ref<const Matrix>& x) {
  if (x.cols() != p.input_size())
    throw Error(ErrorCode::ShapeMismatch, "input width " + std::to_string(x.cols()) +
                                              " != encoder input " + std::to_string(p.input_size()));
  ForwardCache c;
  Matrix a = x;
  for (const auto& layer : p.encoder) {
    c.inputs.push_back(a);
    c.pre.push_back(affine(layer, a));
    a = relu(c.pre.back());
  }
  c.h = a;
  for (std::size_t k = 0; k < p.head.size(); ++k) {
    c.inputs.push_back(a);
    c.pre.push_back(affine(p.head[k], a));
    a = k + 1 < p.head.size() ? relu(c.pre.back()) : c.pre.back();
  }
  c.z = a;
  return c;
}

Encoded encode(const EncoderParams& p, const Eigen::Ref<const Matrix>& x) {
  ForwardCache c = forward(p, x);
  return {std::move(c.h), std::move(c.z)};
}

EncoderParams backward(const EncoderParams& p, const ForwardCache& cache,
                       const Eigen::Ref<const Matrix>& dz, const Eigen::Ref<const Matrix>& dh) {
  EncoderParams g = zeros_like(p);
  const std::size_t n_enc = p.encoder.size();

  Matrix grad = dz;  // w.r.t. the output of the current layer
  for (std::size_t k = p.head.size(); k-- > 0;) {
    const std::size_t idx = n_enc + k;
    const Matrix dpre = k + 1 < p.head.size() ? Matrix(grad.cwiseProduct(relu_mask(cache.pre[idx])))
                                              : grad;
    g.head[k].weight = dpre.transpose() * cache.inputs[idx];
    g.head[k].bias = dpre.colwise().sum().transpose();
    grad = dpre * p.head[k].weight;
  }
  grad += dh;
  for (std::size_t k = n_enc; k-- > 0;) {
    const Matrix dpre = grad.cwiseProduct(relu_mask(cache.pre[k]));
    g.encoder[k].weight = dpre.transpose() * cache.inputs[k];
    g.encoder[k].bias = dpre.colwise().sum().transpose();
    if (k > 0) grad = dpre * p.encoder[k].weight;
  }
  return g;
}

Vector input_gradient(const EncoderParams& p, const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& dh) {
  const ForwardCache c = forward(p, x.transpose());
  Matrix grad = dh.transpose();
  for (std::size_t k = p.encoder.size(); k-- > 0;) {
    grad = grad.cwiseProduct(relu_mask(c.pre[k])) * p.encoder[k].weight;
  }
  return grad.transpose();
}

LossGradientResult loss_gradients(const EncoderParams& p, const ViewBatch& batch,
                                  const LossConfig& cfg, double norm_scale,
                                  const FrozenMasks* frozen, unsigned terms) {
  if (batch.view1.rows() != batch.view2.rows() || batch.view1.cols() != batch.view2.cols())
    throw Error(ErrorCode::ShapeMismatch, "views differ in shape");
  const Eigen::Index b = batch.view1.rows();
  Matrix x(2 * b, batch.view1.cols());
  x << batch.view1, batch.view2;
  const ForwardCache cache = forward(p, x);

  LossGradients lg;
  LossGradientResult out;
  out.breakdown = total_loss(cache.z.topRows(b), cache.z.bottomRows(b), cache.h, cfg, norm_scale,
                             frozen, &lg, terms);
  out.grads = backward(p, cache, lg.dz, lg.dh);
  if (!flatten(out.grads).allFinite())
    throw Error(ErrorCode::NonFiniteGradient, "gradient contains non-finite entries");
  return out;
}

void save_params(const EncoderParams& p, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["format"] = "repscore-params";
  meta["version"] = 1;
  meta["seed"] = p.seed;
  for (const auto& [name, layers] : {std::pair{"encoder", &p.encoder}, std::pair{"head", &p.head}}) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t k = 0; k < layers->size(); ++k) {
      const auto& layer = (*layers)[k];
      const std::string stem = std::string(name) + std::to_string(k);
      save_raw_matrix(layer.weight, dir / (stem + "_weight.repb"), MatrixFormat::Repb);
      save_raw_matrix(layer.bias, dir / (stem + "_bias.repb"), MatrixFormat::Repb);
      arr.push_back({{"in", layer.in()},
                     {"out", layer.out()},
                     {"weight", stem + "_weight.repb"},
                     {"bias", stem + "_bias.repb"}});
    }
    meta[name] = arr;
  }
  write_json(meta, dir / "params.json");
}

EncoderParams load_params(const std::filesystem::path& dir) {
  const nlohmann::json meta = read_json(dir / "params.json");
  EncoderParams p;
  try {
    p.seed = meta.at("seed").get<std::uint64_t>();
    for (const auto& [name, layers] : {std::pair{"encoder", &p.encoder}, std::pair{"head", &p.head}}) {
      for (const auto& entry : meta.at(name)) {
        DenseLayer layer;
        layer.weight = load_raw_matrix(dir / entry.at("weight").get<std::string>(), MatrixFormat::Repb);
        const Matrix bias = load_raw_matrix(dir / entry.at("bias").get<std::string>(), MatrixFormat::Repb);
        if (bias.cols() != 1) throw Error(ErrorCode::ShapeMismatch, "bias must be a column");
        layer.bias = bias.col(0);
        if (layer.in() != entry.at("in").get<Eigen::Index>() ||
            layer.out() != entry.at("out").get<Eigen::Index>())
          throw Error(ErrorCode::ShapeMismatch, "layer shape disagrees with params.json");
        layers->push_back(std::move(layer));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, "params.json: " + std::string(e.what()));
  }
  p.validate();
  return p;
}

}  // namespace repscore
