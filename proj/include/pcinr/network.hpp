#pragma once

#include "pcinr/rng.hpp"
#include "pcinr/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pcinr {

enum class Activation : std::uint8_t { Relu = 0, Sine = 1 };

/// Shape of a coordinate network: input projection, a stack of residual
/// blocks (fc -> [norm] -> core activation -> fc -> [norm] -> +skip -> relu),
/// output projection, sigmoid.
struct NetworkArch {
  int inputDim = 3;
  int posencLevelsSpatial = 12;
  int posencLevelsTemporal = 0;
  int residualBlocks = 2;
  int interBlockWidth = 512;
  int intraBlockWidth = 128;
  int outputDim = 1;
  Activation coreActivation = Activation::Relu;
  double sineFrequency = 64.0;
  bool layerNormEnabled = true;

  int encoded_width() const {
    return 3 * (2 * posencLevelsSpatial + 1) + (inputDim - 3) * (2 * posencLevelsTemporal + 1);
  }
  /// Throws InvalidArgument on an inconsistent architecture.
  void validate() const;

  /// Occupancy network: 2 blocks, 512/128 widths, relu core, L = 12.
  static NetworkArch occupancy();
  /// Color network: 3 blocks, 512/128 widths, sine core at 64, L = 12.
  static NetworkArch color();

  friend bool operator==(const NetworkArch&, const NetworkArch&) = default;
};

enum class TensorRole : std::uint8_t { Weight, Bias, NormGain, NormShift };

struct TensorSpec {
  std::string name;
  TensorRole role;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index offset;
  Eigen::Index size() const { return rows * cols; }
};

/// Tensor slots of one residual block; norm slots are -1 when disabled.
struct BlockSlots {
  int fc1Weight, fc1Bias, norm1Gain = -1, norm1Shift = -1;
  int fc2Weight, fc2Bias, norm2Gain = -1, norm2Shift = -1;
};

struct ParamLayout {
  std::vector<TensorSpec> tensors;
  int inWeight = 0, inBias = 0;
  std::vector<BlockSlots> blocks;
  int outWeight = 0, outBias = 0;
  Eigen::Index total = 0;
};

ParamLayout param_layout(const NetworkArch& arch);
inline Eigen::Index parameter_count(const NetworkArch& arch) { return param_layout(arch).total; }

/// All parameters of one network in a single flat vector. Individual tensors
/// are column-major views into it, in param_layout() order.
template <typename Scalar>
struct NetworkParams {
  NetworkArch arch;
  VectorX<Scalar> values;

  static NetworkParams zeros(const NetworkArch& arch) {
    return {arch, VectorX<Scalar>::Zero(parameter_count(arch))};
  }

  Eigen::Map<const MatrixX<Scalar>> tensor(const TensorSpec& spec) const {
    return {values.data() + spec.offset, spec.rows, spec.cols};
  }
  Eigen::Map<MatrixX<Scalar>> tensor(const TensorSpec& spec) {
    return {values.data() + spec.offset, spec.rows, spec.cols};
  }

  template <typename Other>
  NetworkParams<Other> cast() const {
    return {arch, values.template cast<Other>()};
  }
};

/// Flat view round trip; the flat vector *is* the storage, so these only
/// validate shapes.
template <typename Scalar>
VectorX<Scalar> flatten(const NetworkParams<Scalar>& params) {
  return params.values;
}
template <typename Scalar>
NetworkParams<Scalar> unflatten(const NetworkArch& arch, VectorX<Scalar> values);

/// Random initialization: SIREN scheme for sine layers, Kaiming-uniform for
/// relu-fed layers, unit gain / zero shift for layer norms.
NetworkParams<float> initialize_network(const NetworkArch& arch, CounterRng& rng);

/// Per component c with level L: (c, sin(2^0 pi c), cos(2^0 pi c), ...,
/// sin(2^(L-1) pi c), cos(2^(L-1) pi c)), components concatenated in order.
/// Components must lie in [-1, 1] (1e-9 slack).
Eigen::VectorXd positional_encode(const Eigen::VectorXd& coord, std::span<const int> levels);

/// Column-wise positional encoding of a (dims x n) coordinate matrix.
template <typename Scalar>
MatrixX<Scalar> positional_encode_batch(const Eigen::MatrixXd& coords, std::span<const int> levels);

/// Levels per input component for an architecture: L_x three times, then L_t.
std::vector<int> encoding_levels(const NetworkArch& arch);

/// Intermediate values kept by forward() for backward().
template <typename Scalar>
struct ForwardTape {
  struct Norm {
    MatrixX<Scalar> normalized;
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> invStd;
  };
  struct Block {
    MatrixX<Scalar> input;
    Norm norm1, norm2;
    MatrixX<Scalar> preActivation;
    MatrixX<Scalar> activation;
    MatrixX<Scalar> output;
  };
  MatrixX<Scalar> input;
  std::vector<Block> blocks;
  MatrixX<Scalar> hidden;
  MatrixX<Scalar> logits;
  MatrixX<Scalar> outputs;
};

/// Network outputs (outputDim x n) in (0, 1) for encoded inputs (width x n).
template <typename Scalar>
MatrixX<Scalar> forward(const NetworkParams<Scalar>& params, const MatrixX<Scalar>& inputs);

template <typename Scalar>
MatrixX<Scalar> forward(const NetworkParams<Scalar>& params, const MatrixX<Scalar>& inputs,
                        ForwardTape<Scalar>& tape);

/// Parameter gradient for a given gradient w.r.t. the sigmoid outputs.
template <typename Scalar>
VectorX<Scalar> backward(const NetworkParams<Scalar>& params, const ForwardTape<Scalar>& tape,
                         const MatrixX<Scalar>& outputGradients);

/// Same, starting from the gradient w.r.t. the pre-sigmoid logits.
template <typename Scalar>
VectorX<Scalar> backward_from_logits(const NetworkParams<Scalar>& params,
                                     const ForwardTape<Scalar>& tape,
                                     const MatrixX<Scalar>& logitGradients);

/// Inference over any number of columns. Work is cut into fixed-width,
/// zero-padded chunks so a column's result never depends on its batch.
MatrixX<float> predict(const NetworkParams<float>& params, const MatrixX<float>& inputs);

inline constexpr Eigen::Index kInferenceChunk = 1024;

}  // namespace pcinr
