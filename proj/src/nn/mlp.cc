#include "locolab/nn/mlp.h"

#include <cmath>
#include <cstring>

#include <Eigen/QR>

#include "locolab/errors.h"

namespace locolab::nn {

namespace {

double Sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double Softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

Eigen::MatrixXd Apply(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::kIdentity:
      return z;
    case Activation::kTanh:
      return z.array().tanh().matrix();
    case Activation::kSoftplus:
      return z.unaryExpr([](double v) { return Softplus(v); });
    case Activation::kRelu:
      return z.cwiseMax(0.0);
  }
  return z;
}

Eigen::MatrixXd FirstDerivative(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::kIdentity:
      return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    case Activation::kTanh:
      return (1.0 - z.array().tanh().square()).matrix();
    case Activation::kSoftplus:
      return z.unaryExpr([](double v) { return Sigmoid(v); });
    case Activation::kRelu:
      return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
  }
  return z;
}

Eigen::MatrixXd SecondDerivative(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::kIdentity:
      return Eigen::MatrixXd::Zero(z.rows(), z.cols());
    case Activation::kTanh:
      return z.unaryExpr([](double v) {
        const double t = std::tanh(v);
        return -2.0 * t * (1.0 - t * t);
      });
    case Activation::kSoftplus:
      return z.unaryExpr([](double v) {
        const double s = Sigmoid(v);
        return s * (1.0 - s);
      });
    case Activation::kRelu:
      break;
  }
  throw NonSmoothActivation("activation has no second derivative");
}

void Fnv(std::uint64_t& h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
}

Eigen::MatrixXd OrthogonalMatrix(int rows, int cols, Rng& rng) {
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (int j = 0; j < small; ++j)
    for (int i = 0; i < big; ++i) a(i, j) = rng.Normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small);
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (rows >= cols) return q;
  return q.transpose();
}

}  // namespace

std::string ToString(Activation activation) {
  switch (activation) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kTanh:
      return "tanh";
    case Activation::kSoftplus:
      return "softplus";
    case Activation::kRelu:
      return "relu";
  }
  return "unknown";
}

Activation ActivationFromString(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  if (name == "softplus") return Activation::kSoftplus;
  if (name == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation '" + name + "'");
}

bool IsSmooth(Activation activation) {
  return activation != Activation::kRelu;
}

MlpGradients& MlpGradients::operator+=(const MlpGradients& other) {
  if (other.weight.size() != weight.size())
    throw DimMismatch("gradient layer count mismatch");
  for (std::size_t l = 0; l < weight.size(); ++l) {
    weight[l] += other.weight[l];
    bias[l] += other.bias[l];
  }
  return *this;
}

MlpGradients& MlpGradients::operator*=(double scale) {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    weight[l] *= scale;
    bias[l] *= scale;
  }
  return *this;
}

double MlpGradients::SquaredNorm() const {
  double s = 0.0;
  for (std::size_t l = 0; l < weight.size(); ++l)
    s += weight[l].squaredNorm() + bias[l].squaredNorm();
  return s;
}

std::vector<std::span<const double>> MlpGradients::Blocks() const {
  std::vector<std::span<const double>> blocks;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    blocks.emplace_back(weight[l].data(), weight[l].size());
    blocks.emplace_back(bias[l].data(), bias[l].size());
  }
  return blocks;
}

std::vector<std::span<double>> MlpGradients::MutableBlocks() {
  std::vector<std::span<double>> blocks;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    blocks.emplace_back(weight[l].data(), weight[l].size());
    blocks.emplace_back(bias[l].data(), bias[l].size());
  }
  return blocks;
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].weight.rows())
      throw DimMismatch("bias size does not match layer output width");
    if (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows())
      throw DimMismatch("consecutive layer widths are incompatible");
  }
}

Mlp::Mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
         Activation hidden_activation, Activation output_activation) {
  int in = input_dim;
  for (int width : hidden) {
    layers_.push_back({Eigen::MatrixXd::Zero(width, in),
                       Eigen::VectorXd::Zero(width), hidden_activation});
    in = width;
  }
  layers_.push_back({Eigen::MatrixXd::Zero(output_dim, in),
                     Eigen::VectorXd::Zero(output_dim), output_activation});
}

void Mlp::InitOrthogonal(Rng& rng, double gain, double output_gain) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& layer = layers_[l];
    const double g = (l + 1 == layers_.size()) ? output_gain : gain;
    layer.weight = g * OrthogonalMatrix(static_cast<int>(layer.weight.rows()),
                                        static_cast<int>(layer.weight.cols()),
                                        rng);
    layer.bias.setZero();
  }
}

int Mlp::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

void Mlp::CheckInput(Eigen::Index rows) const {
  if (layers_.empty()) throw DimMismatch("network has no layers");
  if (rows != input_dim()) {
    throw DimMismatch("input has " + std::to_string(rows) +
                      " rows, network expects " + std::to_string(input_dim()));
  }
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd& x,
                             ForwardCache* cache) const {
  CheckInput(x.rows());
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Eigen::MatrixXd a = x;
  for (const auto& layer : layers_) {
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    Eigen::MatrixXd out = Apply(layer.activation, z);
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(std::move(z));
    }
    a = std::move(out);
  }
  return a;
}

Eigen::VectorXd Mlp::ForwardOne(const Eigen::VectorXd& x) const {
  return Forward(Eigen::MatrixXd(x)).col(0);
}

MlpGradients Mlp::Backward(const ForwardCache& cache, const Eigen::MatrixXd& dy,
                           Eigen::MatrixXd* dx) const {
  const std::size_t n_layers = layers_.size();
  if (cache.pre.size() != n_layers)
    throw DimMismatch("cache does not come from this network");
  if (dy.rows() != output_dim() || dy.cols() != cache.pre.back().cols())
    throw DimMismatch("upstream gradient shape does not match output");
  MlpGradients grads;
  grads.weight.resize(n_layers);
  grads.bias.resize(n_layers);
  Eigen::MatrixXd upstream = dy;
  for (std::size_t i = n_layers; i-- > 0;) {
    const Eigen::MatrixXd dz =
        upstream.cwiseProduct(FirstDerivative(layers_[i].activation, cache.pre[i]));
    grads.weight[i] = dz * cache.inputs[i].transpose();
    grads.bias[i] = dz.rowwise().sum();
    if (i > 0 || dx != nullptr) upstream = layers_[i].weight.transpose() * dz;
  }
  if (dx != nullptr) *dx = std::move(upstream);
  return grads;
}

PenaltyResult Mlp::InputGradPenalty(const Eigen::MatrixXd& x) const {
  for (const auto& layer : layers_) {
    if (!IsSmooth(layer.activation)) {
      throw NonSmoothActivation("gradient penalty requires smooth activations, "
                                "found " + ToString(layer.activation));
    }
  }
  if (output_dim() != 1)
    throw DimMismatch("gradient penalty requires a scalar-output network");
  ForwardCache cache;
  PenaltyResult result;
  result.outputs = Forward(x, &cache);
  const std::size_t n_layers = layers_.size();
  const auto batch = static_cast<double>(x.cols());

  // First reverse pass: e[l] is dD/d(out_l), delta[l] is dD/d(z_l).
  std::vector<Eigen::MatrixXd> d1(n_layers), d2(n_layers), e(n_layers),
      delta(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    d1[l] = FirstDerivative(layers_[l].activation, cache.pre[l]);
    d2[l] = SecondDerivative(layers_[l].activation, cache.pre[l]);
  }
  e[n_layers - 1] = Eigen::MatrixXd::Ones(1, x.cols());
  for (std::size_t l = n_layers; l-- > 0;) {
    delta[l] = d1[l].cwiseProduct(e[l]);
    if (l > 0) e[l - 1] = layers_[l].weight.transpose() * delta[l];
  }
  result.input_grads = layers_[0].weight.transpose() * delta[0];
  result.penalty = result.input_grads.colwise().squaredNorm().sum() / batch;

  // Second reverse pass, through the first one.
  result.grads = ZeroGradients();
  auto& gw = result.grads.weight;
  auto& gb = result.grads.bias;
  const Eigen::MatrixXd g_bar = (2.0 / batch) * result.input_grads;
  std::vector<Eigen::MatrixXd> z_bar(n_layers);
  gw[0] += delta[0] * g_bar.transpose();
  Eigen::MatrixXd delta_bar = layers_[0].weight * g_bar;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Eigen::MatrixXd e_bar = d1[l].cwiseProduct(delta_bar);
    z_bar[l] = d2[l].cwiseProduct(e[l]).cwiseProduct(delta_bar);
    if (l + 1 < n_layers) {
      gw[l + 1] += delta[l + 1] * e_bar.transpose();
      delta_bar = layers_[l + 1].weight * e_bar;
    }
  }
  // Propagate the pre-activation adjoints back through the forward graph.
  Eigen::MatrixXd a_bar = Eigen::MatrixXd::Zero(1, x.cols());
  for (std::size_t l = n_layers; l-- > 0;) {
    const Eigen::MatrixXd z_tilde = z_bar[l] + d1[l].cwiseProduct(a_bar);
    gw[l] += z_tilde * cache.inputs[l].transpose();
    gb[l] += z_tilde.rowwise().sum();
    if (l > 0) a_bar = layers_[l].weight.transpose() * z_tilde;
  }
  return result;
}

MlpGradients Mlp::ZeroGradients() const {
  MlpGradients grads;
  for (const auto& layer : layers_) {
    grads.weight.push_back(
        Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
    grads.bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
  }
  return grads;
}

std::vector<std::span<double>> Mlp::Blocks() {
  std::vector<std::span<double>> blocks;
  for (auto& layer : layers_) {
    blocks.emplace_back(layer.weight.data(), layer.weight.size());
    blocks.emplace_back(layer.bias.data(), layer.bias.size());
  }
  return blocks;
}

std::vector<std::span<const double>> Mlp::Blocks() const {
  std::vector<std::span<const double>> blocks;
  for (const auto& layer : layers_) {
    blocks.emplace_back(layer.weight.data(), layer.weight.size());
    blocks.emplace_back(layer.bias.data(), layer.bias.size());
  }
  return blocks;
}

std::size_t Mlp::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& layer : layers_)
    n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

std::uint64_t Mlp::Checksum() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& layer : layers_) {
    const std::int64_t shape[3] = {layer.weight.rows(), layer.weight.cols(),
                                   static_cast<std::int64_t>(layer.activation)};
    Fnv(h, shape, sizeof(shape));
    Fnv(h, layer.weight.data(), layer.weight.size() * sizeof(double));
    Fnv(h, layer.bias.data(), layer.bias.size() * sizeof(double));
  }
  return h;
}

bool Mlp::AllFinite() const {
  for (const auto& layer : layers_) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

void Mlp::Save(BinaryWriter& out) const {
  out.WriteString("mlp");
  out.Write<std::uint64_t>(layers_.size());
  for (const auto& layer : layers_) {
    out.Write<std::int32_t>(static_cast<std::int32_t>(layer.activation));
    out.WriteMatrix(layer.weight);
    out.WriteVector(layer.bias);
  }
}

Mlp Mlp::Load(BinaryReader& in) {
  in.Expect("mlp");
  const auto n = in.Read<std::uint64_t>();
  if (n > 64) throw IoError("implausible layer count");
  std::vector<Layer> layers(n);
  for (auto& layer : layers) {
    const auto act = in.Read<std::int32_t>();
    if (act < 0 || act > static_cast<int>(Activation::kRelu))
      throw IoError("unknown activation id in checkpoint");
    layer.activation = static_cast<Activation>(act);
    layer.weight = in.ReadMatrix();
    layer.bias = in.ReadVector();
  }
  return Mlp(std::move(layers));
}

}  // namespace locolab::nn
