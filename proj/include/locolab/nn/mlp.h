#ifndef LOCOLAB_NN_MLP_H_
#define LOCOLAB_NN_MLP_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "locolab/binary_io.h"
#include "locolab/rng.h"

namespace locolab::nn {

enum class Activation { kIdentity, kTanh, kSoftplus, kRelu };

std::string ToString(Activation activation);
// Throws ConfigError for unknown names.
Activation ActivationFromString(const std::string& name);
// Twice-differentiable everywhere (ReLU is not).
bool IsSmooth(Activation activation);

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kIdentity;

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Samples are stored column-wise: a batch is an (input_dim x batch) matrix.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input of layer l
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of layer l
};

// Same shapes as the parameters of an Mlp.
struct MlpGradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  MlpGradients& operator+=(const MlpGradients& other);
  MlpGradients& operator*=(double scale);
  double SquaredNorm() const;
  std::vector<std::span<const double>> Blocks() const;
  std::vector<std::span<double>> MutableBlocks();
};

struct PenaltyResult {
  double penalty = 0.0;          // mean over the batch of |dD/dx|^2
  MlpGradients grads;            // d penalty / d parameters
  Eigen::MatrixXd outputs;       // D(x), 1 x batch
  Eigen::MatrixXd input_grads;   // dD/dx, input_dim x batch
};

// Fully-connected network with per-layer activations.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Layer> layers);
  // Zero-initialised network; call InitOrthogonal for training.
  Mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
      Activation hidden_activation, Activation output_activation);

  // Orthogonal weights (scaled by `gain`, last layer by `output_gain`), zero
  // biases.
  void InitOrthogonal(Rng& rng, double gain, double output_gain);

  int input_dim() const;
  int output_dim() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }

  Eigen::MatrixXd Forward(const Eigen::MatrixXd& x,
                          ForwardCache* cache = nullptr) const;
  Eigen::VectorXd ForwardOne(const Eigen::VectorXd& x) const;

  // Reverse pass for the upstream gradient `dy` (output_dim x batch).
  // Gradients are summed over the batch.
  MlpGradients Backward(const ForwardCache& cache, const Eigen::MatrixXd& dy,
                        Eigen::MatrixXd* dx = nullptr) const;

  // For a scalar-output network: the mean squared input-gradient norm and its
  // exact parameter gradient (second reverse pass through the backward graph).
  // Throws NonSmoothActivation if any layer is not twice differentiable.
  PenaltyResult InputGradPenalty(const Eigen::MatrixXd& x) const;

  MlpGradients ZeroGradients() const;
  std::vector<std::span<double>> Blocks();
  std::vector<std::span<const double>> Blocks() const;
  std::size_t ParameterCount() const;
  // FNV-1a over the raw parameter bytes and the layer structure.
  std::uint64_t Checksum() const;
  bool AllFinite() const;

  void Save(BinaryWriter& out) const;
  static Mlp Load(BinaryReader& in);

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  void CheckInput(Eigen::Index rows) const;

  std::vector<Layer> layers_;
};

}  // namespace locolab::nn

#endif  // LOCOLAB_NN_MLP_H_
