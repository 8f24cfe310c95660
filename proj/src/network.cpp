#include "pcinr/network.hpp"

#include "pcinr/error.hpp"

#include <cmath>
#include <numbers>

namespace pcinr {

namespace {

constexpr double kNormEpsilon = 1e-5;

}  // namespace

void NetworkArch::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
  if (inputDim != 3 && inputDim != 4) fail("network input dimension must be 3 or 4");
  if (outputDim != 1 && outputDim != 3) fail("network output dimension must be 1 or 3");
  if (posencLevelsSpatial < 0 || posencLevelsSpatial > 30) fail("spatial encoding levels out of range");
  if (posencLevelsTemporal < 0 || posencLevelsTemporal > 30) fail("temporal encoding levels out of range");
  if (inputDim == 3 && posencLevelsTemporal != 0) fail("temporal levels require a 4D input");
  if (residualBlocks < 0 || residualBlocks > 64) fail("residual block count out of range");
  if (interBlockWidth < 1 || intraBlockWidth < 1) fail("layer widths must be positive");
  if (coreActivation == Activation::Sine && !(sineFrequency > 0)) fail("sine frequency must be positive");
}

NetworkArch NetworkArch::occupancy() {
  NetworkArch a;
  a.residualBlocks = 2;
  a.outputDim = 1;
  a.coreActivation = Activation::Relu;
  return a;
}

NetworkArch NetworkArch::color() {
  NetworkArch a;
  a.residualBlocks = 3;
  a.outputDim = 3;
  a.coreActivation = Activation::Sine;
  a.sineFrequency = 64.0;
  return a;
}

ParamLayout param_layout(const NetworkArch& arch) {
  arch.validate();
  ParamLayout lay;
  auto add = [&](std::string name, TensorRole role, Eigen::Index rows, Eigen::Index cols) {
    lay.tensors.push_back({std::move(name), role, rows, cols, lay.total});
    lay.total += rows * cols;
    return static_cast<int>(lay.tensors.size() - 1);
  };
  const Eigen::Index inter = arch.interBlockWidth;
  const Eigen::Index intra = arch.intraBlockWidth;
  lay.inWeight = add("input.weight", TensorRole::Weight, inter, arch.encoded_width());
  lay.inBias = add("input.bias", TensorRole::Bias, inter, 1);
  for (int b = 0; b < arch.residualBlocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    BlockSlots s{};
    s.fc1Weight = add(p + "fc1.weight", TensorRole::Weight, intra, inter);
    s.fc1Bias = add(p + "fc1.bias", TensorRole::Bias, intra, 1);
    if (arch.layerNormEnabled) {
      s.norm1Gain = add(p + "norm1.gain", TensorRole::NormGain, intra, 1);
      s.norm1Shift = add(p + "norm1.shift", TensorRole::NormShift, intra, 1);
    }
    s.fc2Weight = add(p + "fc2.weight", TensorRole::Weight, inter, intra);
    s.fc2Bias = add(p + "fc2.bias", TensorRole::Bias, inter, 1);
    if (arch.layerNormEnabled) {
      s.norm2Gain = add(p + "norm2.gain", TensorRole::NormGain, inter, 1);
      s.norm2Shift = add(p + "norm2.shift", TensorRole::NormShift, inter, 1);
    }
    lay.blocks.push_back(s);
  }
  lay.outWeight = add("output.weight", TensorRole::Weight, arch.outputDim, inter);
  lay.outBias = add("output.bias", TensorRole::Bias, arch.outputDim, 1);
  return lay;
}

template <typename Scalar>
NetworkParams<Scalar> unflatten(const NetworkArch& arch, VectorX<Scalar> values) {
  if (values.size() != parameter_count(arch))
    throw Error(ErrorKind::ShapeMismatch,
                "flat parameter vector has " + std::to_string(values.size()) + " entries, arch needs " +
                    std::to_string(parameter_count(arch)));
  return {arch, std::move(values)};
}

NetworkParams<float> initialize_network(const NetworkArch& arch, CounterRng& rng) {
  const ParamLayout lay = param_layout(arch);
  auto params = NetworkParams<float>::zeros(arch);
  auto fill_uniform = [&](int slot, double bound) {
    auto t = params.tensor(lay.tensors[static_cast<std::size_t>(slot)]);
    for (Eigen::Index j = 0; j < t.cols(); ++j)
      for (Eigen::Index i = 0; i < t.rows(); ++i)
        t(i, j) = static_cast<float>((2.0 * rng.uniform() - 1.0) * bound);
  };
  auto fan_in = [&](int slot) {
    return static_cast<double>(lay.tensors[static_cast<std::size_t>(slot)].cols);
  };
  auto linear = [&](int weight, int bias, double weightBound) {
    fill_uniform(weight, weightBound);
    fill_uniform(bias, 1.0 / std::sqrt(fan_in(weight)));
  };
  auto kaiming = [&](int slot) { return std::sqrt(6.0 / fan_in(slot)); };

  linear(lay.inWeight, lay.inBias, 1.0 / std::sqrt(fan_in(lay.inWeight)));
  for (std::size_t b = 0; b < lay.blocks.size(); ++b) {
    const BlockSlots& s = lay.blocks[b];
    double bound1 = kaiming(s.fc1Weight);
    if (arch.coreActivation == Activation::Sine) {
      const double n = fan_in(s.fc1Weight);
      bound1 = b == 0 ? 1.0 / n : std::sqrt(6.0) / (arch.sineFrequency * std::sqrt(n));
    }
    linear(s.fc1Weight, s.fc1Bias, bound1);
    linear(s.fc2Weight, s.fc2Bias, kaiming(s.fc2Weight));
    if (arch.layerNormEnabled) {
      params.tensor(lay.tensors[static_cast<std::size_t>(s.norm1Gain)]).setOnes();
      params.tensor(lay.tensors[static_cast<std::size_t>(s.norm2Gain)]).setOnes();
    }
  }
  linear(lay.outWeight, lay.outBias, 1.0 / std::sqrt(fan_in(lay.outWeight)));
  return params;
}

std::vector<int> encoding_levels(const NetworkArch& arch) {
  std::vector<int> levels(3, arch.posencLevelsSpatial);
  for (int k = 3; k < arch.inputDim; ++k) levels.push_back(arch.posencLevelsTemporal);
  return levels;
}

namespace {

void check_unit_range(double c) {
  if (!(c >= -1.0 - 1e-9 && c <= 1.0 + 1e-9))
    throw Error(ErrorKind::InvalidArgument,
                "positional encoding input " + std::to_string(c) + " outside [-1, 1]");
}

}  // namespace

Eigen::VectorXd positional_encode(const Eigen::VectorXd& coord, std::span<const int> levels) {
  if (static_cast<std::size_t>(coord.size()) != levels.size())
    throw Error(ErrorKind::ShapeMismatch, "one encoding level per coordinate component required");
  Eigen::Index width = 0;
  for (int l : levels) width += 2 * l + 1;
  Eigen::VectorXd out(width);
  Eigen::Index row = 0;
  for (Eigen::Index k = 0; k < coord.size(); ++k) {
    const double c = coord[k];
    check_unit_range(c);
    out[row++] = c;
    double freq = std::numbers::pi;
    for (int l = 0; l < levels[static_cast<std::size_t>(k)]; ++l, freq *= 2.0) {
      out[row++] = std::sin(freq * c);
      out[row++] = std::cos(freq * c);
    }
  }
  return out;
}

template <typename Scalar>
MatrixX<Scalar> positional_encode_batch(const Eigen::MatrixXd& coords, std::span<const int> levels) {
  if (static_cast<std::size_t>(coords.rows()) != levels.size())
    throw Error(ErrorKind::ShapeMismatch, "one encoding level per coordinate component required");
  Eigen::Index width = 0;
  for (int l : levels) width += 2 * l + 1;
  MatrixX<Scalar> out(width, coords.cols());
  for (Eigen::Index j = 0; j < coords.cols(); ++j) {
    Eigen::Index row = 0;
    for (Eigen::Index k = 0; k < coords.rows(); ++k) {
      const double c = coords(k, j);
      check_unit_range(c);
      out(row++, j) = static_cast<Scalar>(c);
      double freq = std::numbers::pi;
      for (int l = 0; l < levels[static_cast<std::size_t>(k)]; ++l, freq *= 2.0) {
        out(row++, j) = static_cast<Scalar>(std::sin(freq * c));
        out(row++, j) = static_cast<Scalar>(std::cos(freq * c));
      }
    }
  }
  return out;
}

namespace {

template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
struct Net {
  const NetworkParams<Scalar>& params;
  ParamLayout lay;

  explicit Net(const NetworkParams<Scalar>& p) : params(p), lay(param_layout(p.arch)) {
    if (p.values.size() != lay.total)
      throw Error(ErrorKind::ShapeMismatch, "parameter vector does not match architecture");
  }

  auto t(int slot) const { return params.tensor(lay.tensors[static_cast<std::size_t>(slot)]); }
  auto vec(int slot) const { return t(slot).col(0); }
};

// Normalizes each column over features, then applies gain and shift.
template <typename Scalar>
MatrixX<Scalar> layer_norm(const MatrixX<Scalar>& z, const Net<Scalar>& net, int gain, int shift,
                           typename ForwardTape<Scalar>::Norm* cache) {
  const RowVectorX<Scalar> mean = z.colwise().mean();
  MatrixX<Scalar> centered = z.rowwise() - mean;
  const RowVectorX<Scalar> var = centered.array().square().colwise().mean();
  const RowVectorX<Scalar> invStd =
      (var.array() + static_cast<Scalar>(kNormEpsilon)).rsqrt().matrix();
  centered.array().rowwise() *= invStd.array();
  MatrixX<Scalar> out = (centered.array().colwise() * net.vec(gain).array()).matrix();
  out.colwise() += net.vec(shift);
  if (cache) {
    cache->normalized = std::move(centered);
    cache->invStd = invStd;
  }
  return out;
}

template <typename Scalar>
MatrixX<Scalar> layer_norm_backward(const MatrixX<Scalar>& dOut,
                                    const typename ForwardTape<Scalar>::Norm& cache,
                                    const Net<Scalar>& net, int gain, VectorX<Scalar>& grad) {
  const auto& spG = net.lay.tensors[static_cast<std::size_t>(gain)];
  const auto& spS = net.lay.tensors[static_cast<std::size_t>(gain + 1)];
  grad.segment(spG.offset, spG.size()) = (dOut.array() * cache.normalized.array()).rowwise().sum();
  grad.segment(spS.offset, spS.size()) = dOut.rowwise().sum();
  const MatrixX<Scalar> dHat = (dOut.array().colwise() * net.vec(gain).array()).matrix();
  const RowVectorX<Scalar> meanD = dHat.colwise().mean();
  const RowVectorX<Scalar> meanDX = (dHat.array() * cache.normalized.array()).colwise().mean();
  MatrixX<Scalar> dz =
      ((dHat.array().rowwise() - meanD.array()) -
       cache.normalized.array().rowwise() * meanDX.array())
          .matrix();
  dz.array().rowwise() *= cache.invStd.array();
  return dz;
}

template <typename Scalar>
MatrixX<Scalar> run_forward(const NetworkParams<Scalar>& params, const MatrixX<Scalar>& inputs,
                            ForwardTape<Scalar>* tape) {
  const Net<Scalar> net(params);
  const NetworkArch& arch = params.arch;
  if (inputs.rows() != arch.encoded_width())
    throw Error(ErrorKind::ShapeMismatch,
                "input width " + std::to_string(inputs.rows()) + " does not match encoded width " +
                    std::to_string(arch.encoded_width()));
  const auto omega = static_cast<Scalar>(arch.sineFrequency);

  MatrixX<Scalar> h = net.t(net.lay.inWeight) * inputs;
  h.colwise() += net.vec(net.lay.inBias);
  if (tape) {
    tape->input = inputs;
    tape->blocks.assign(net.lay.blocks.size(), {});
  }

  for (std::size_t b = 0; b < net.lay.blocks.size(); ++b) {
    const BlockSlots& s = net.lay.blocks[b];
    auto* bt = tape ? &tape->blocks[b] : nullptr;

    MatrixX<Scalar> u = net.t(s.fc1Weight) * h;
    u.colwise() += net.vec(s.fc1Bias);
    if (arch.layerNormEnabled) u = layer_norm(u, net, s.norm1Gain, s.norm1Shift, bt ? &bt->norm1 : nullptr);

    MatrixX<Scalar> a;
    if (arch.coreActivation == Activation::Relu) {
      a = u.cwiseMax(Scalar(0));
    } else {
      a = (u.array() * omega).sin().matrix();
    }

    MatrixX<Scalar> r = net.t(s.fc2Weight) * a;
    r.colwise() += net.vec(s.fc2Bias);
    if (arch.layerNormEnabled) r = layer_norm(r, net, s.norm2Gain, s.norm2Shift, bt ? &bt->norm2 : nullptr);
    r += h;
    MatrixX<Scalar> out = r.cwiseMax(Scalar(0));

    if (bt) {
      bt->input = std::move(h);
      bt->preActivation = std::move(u);
      bt->activation = std::move(a);
      bt->output = out;
    }
    h = std::move(out);
  }

  MatrixX<Scalar> logits = net.t(net.lay.outWeight) * h;
  logits.colwise() += net.vec(net.lay.outBias);
  MatrixX<Scalar> outputs = ((-logits.array()).exp() + Scalar(1)).inverse().matrix();
  if (tape) {
    tape->hidden = std::move(h);
    tape->logits = std::move(logits);
    tape->outputs = outputs;
  }
  return outputs;
}

}  // namespace

template <typename Scalar>
MatrixX<Scalar> forward(const NetworkParams<Scalar>& params, const MatrixX<Scalar>& inputs) {
  return run_forward<Scalar>(params, inputs, nullptr);
}

template <typename Scalar>
MatrixX<Scalar> forward(const NetworkParams<Scalar>& params, const MatrixX<Scalar>& inputs,
                        ForwardTape<Scalar>& tape) {
  return run_forward<Scalar>(params, inputs, &tape);
}

template <typename Scalar>
VectorX<Scalar> backward_from_logits(const NetworkParams<Scalar>& params,
                                     const ForwardTape<Scalar>& tape,
                                     const MatrixX<Scalar>& logitGradients) {
  const Net<Scalar> net(params);
  const NetworkArch& arch = params.arch;
  if (logitGradients.rows() != tape.logits.rows() || logitGradients.cols() != tape.logits.cols())
    throw Error(ErrorKind::ShapeMismatch, "output gradient shape differs from forward outputs");
  if (tape.blocks.size() != net.lay.blocks.size())
    throw Error(ErrorKind::ShapeMismatch, "tape was recorded for a different architecture");
  const auto omega = static_cast<Scalar>(arch.sineFrequency);

  VectorX<Scalar> grad = VectorX<Scalar>::Zero(net.lay.total);
  auto store_linear = [&](int weight, int bias, const MatrixX<Scalar>& dz, const MatrixX<Scalar>& x) {
    const auto& sw = net.lay.tensors[static_cast<std::size_t>(weight)];
    const auto& sb = net.lay.tensors[static_cast<std::size_t>(bias)];
    Eigen::Map<MatrixX<Scalar>>(grad.data() + sw.offset, sw.rows, sw.cols).noalias() = dz * x.transpose();
    grad.segment(sb.offset, sb.size()) = dz.rowwise().sum();
  };

  store_linear(net.lay.outWeight, net.lay.outBias, logitGradients, tape.hidden);
  MatrixX<Scalar> dh = net.t(net.lay.outWeight).transpose() * logitGradients;

  for (std::size_t bi = net.lay.blocks.size(); bi-- > 0;) {
    const BlockSlots& s = net.lay.blocks[bi];
    const auto& bt = tape.blocks[bi];

    MatrixX<Scalar> dr = (bt.output.array() > Scalar(0)).select(dh, Scalar(0));
    MatrixX<Scalar> dz2 = arch.layerNormEnabled
                              ? layer_norm_backward(dr, bt.norm2, net, s.norm2Gain, grad)
                              : dr;
    store_linear(s.fc2Weight, s.fc2Bias, dz2, bt.activation);
    MatrixX<Scalar> du = net.t(s.fc2Weight).transpose() * dz2;
    if (arch.coreActivation == Activation::Relu) {
      du = (bt.preActivation.array() > Scalar(0)).select(du, Scalar(0));
    } else {
      du.array() *= (bt.preActivation.array() * omega).cos() * omega;
    }
    MatrixX<Scalar> dz1 = arch.layerNormEnabled
                              ? layer_norm_backward(du, bt.norm1, net, s.norm1Gain, grad)
                              : du;
    store_linear(s.fc1Weight, s.fc1Bias, dz1, bt.input);
    dh = net.t(s.fc1Weight).transpose() * dz1 + dr;
  }

  store_linear(net.lay.inWeight, net.lay.inBias, dh, tape.input);
  return grad;
}

template <typename Scalar>
VectorX<Scalar> backward(const NetworkParams<Scalar>& params, const ForwardTape<Scalar>& tape,
                         const MatrixX<Scalar>& outputGradients) {
  if (outputGradients.rows() != tape.outputs.rows() || outputGradients.cols() != tape.outputs.cols())
    throw Error(ErrorKind::ShapeMismatch, "output gradient shape differs from forward outputs");
  const MatrixX<Scalar> dLogits =
      (outputGradients.array() * tape.outputs.array() * (Scalar(1) - tape.outputs.array())).matrix();
  return backward_from_logits(params, tape, dLogits);
}

MatrixX<float> predict(const NetworkParams<float>& params, const MatrixX<float>& inputs) {
  MatrixX<float> out(params.arch.outputDim, inputs.cols());
  MatrixX<float> chunk = MatrixX<float>::Zero(inputs.rows(), kInferenceChunk);
  for (Eigen::Index start = 0; start < inputs.cols(); start += kInferenceChunk) {
    const Eigen::Index n = std::min(kInferenceChunk, inputs.cols() - start);
    chunk.leftCols(n) = inputs.middleCols(start, n);
    if (n < kInferenceChunk) chunk.rightCols(kInferenceChunk - n).setZero();
    out.middleCols(start, n) = forward(params, chunk).leftCols(n);
  }
  return out;
}

template NetworkParams<float> unflatten(const NetworkArch&, VectorX<float>);
template NetworkParams<double> unflatten(const NetworkArch&, VectorX<double>);
template MatrixX<float> positional_encode_batch<float>(const Eigen::MatrixXd&, std::span<const int>);
template MatrixX<double> positional_encode_batch<double>(const Eigen::MatrixXd&, std::span<const int>);
template MatrixX<float> forward(const NetworkParams<float>&, const MatrixX<float>&);
template MatrixX<double> forward(const NetworkParams<double>&, const MatrixX<double>&);
template MatrixX<float> forward(const NetworkParams<float>&, const MatrixX<float>&, ForwardTape<float>&);
template MatrixX<double> forward(const NetworkParams<double>&, const MatrixX<double>&, ForwardTape<double>&);
template VectorX<float> backward(const NetworkParams<float>&, const ForwardTape<float>&, const MatrixX<float>&);
template VectorX<double> backward(const NetworkParams<double>&, const ForwardTape<double>&, const MatrixX<double>&);
template VectorX<float> backward_from_logits(const NetworkParams<float>&, const ForwardTape<float>&,
                                             const MatrixX<float>&);
template VectorX<double> backward_from_logits(const NetworkParams<double>&, const ForwardTape<double>&,
                                              const MatrixX<double>&);

}  // namespace pcinr
