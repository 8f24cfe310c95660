#include "pcinr/attributes.hpp"

#include "pcinr/error.hpp"
#include "pcinr/kdtree.hpp"

#include <algorithm>

namespace pcinr {

ColorTarget build_color_targets(const VoxelizedCloud& reconstructed, const VoxelizedCloud& original) {
  if (!original.has_colors()) throw Error(ErrorKind::InvalidArgument, "color targets need an original with colors");
  if (reconstructed.empty() || original.empty())
    throw Error(ErrorKind::InvalidArgument, "color targets need nonempty point sets");
  const KdTree tree(original.points());
  ColorTarget out{reconstructed.without_colors(), std::vector<Eigen::Vector3f>(reconstructed.size())};
  const auto& points = reconstructed.points();
  parallel_for(points.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Rgb& c = original.colors()[tree.nearest(points[i]).index];
      out.colors[i] = Eigen::Vector3f(c.r, c.g, c.b) / 255.0f;
    }
  });
  return out;
}

namespace {

struct ColorSample {
  std::size_t frame;
  std::size_t index;
};

TrainOutput train_color(std::span<const ColorTarget> frames, const NetworkArch& arch, const AttrTrainConfig& config,
                        std::uint64_t originalPoints, const std::optional<NetworkParams<float>>& reference,
                        bool freshInit, int controlPoints) {
  if (arch.outputDim != 3) throw Error(ErrorKind::InvalidArgument, "color network needs three outputs");
  if (frames.empty() || originalPoints == 0) throw Error(ErrorKind::InvalidArgument, "no color targets to train on");
  const int resolutionBits = frames.front().geometry.resolution_bits();
  std::vector<std::uint64_t> offsets{0};
  for (const auto& f : frames) {
    if (f.geometry.empty()) throw Error(ErrorKind::InvalidArgument, "empty color target frame");
    if (f.geometry.resolution_bits() != resolutionBits)
      throw Error(ErrorKind::InvalidArgument, "frames of a group must share one resolution");
    offsets.push_back(offsets.back() + f.geometry.size());
  }

  if (reference && !(reference->arch == arch))
    throw Error(ErrorKind::ShapeMismatch, "reference network has another shape");
  NetworkParams<float> init;
  if (reference && !freshInit) {
    init = *reference;
  } else {
    CounterRng initRng(config.train.seed, streams::kInit);
    init = initialize_network(arch, initRng);
  }
  std::vector<NetworkParams<float>> start(static_cast<std::size_t>(std::max(1, controlPoints)), init);

  Regularizer regularizer;
  regularizer.weight = config.train.lambda / static_cast<double>(originalPoints);
  if (reference) regularizer.anchor = reference->values;

  const bool curve = controlPoints > 1;
  const auto frameCount = static_cast<std::int64_t>(frames.size());
  std::vector<Voxel> voxels;
  std::vector<double> times;
  const BatchSource source = [&](std::int64_t frame, int size, CounterRng& rng, Batch& batch) {
    const auto n = static_cast<std::size_t>(size);
    voxels.resize(n);
    times.assign(arch.inputDim == 4 ? n : 0, 0.0);
    batch.targets.resize(3, size);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t t, k;
      if (curve) {
        t = static_cast<std::size_t>(frame);
        k = rng.below(frames[t].geometry.size());
      } else {
        const std::uint64_t g = rng.below(offsets.back());
        t = static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), g) - offsets.begin() - 1);
        k = g - offsets[t];
      }
      voxels[i] = frames[t].geometry.points()[k];
      batch.targets.col(static_cast<Eigen::Index>(i)) = frames[t].colors[k];
      if (!times.empty()) times[i] = normalize_time(static_cast<std::int64_t>(t), frameCount);
    }
    batch.inputs = encode_inputs(arch, voxels, resolutionBits, times);
  };
  return train_network(std::move(start), config.train, LossSpec{LossKind::SquaredError}, regularizer, frameCount,
                       source);
}

}  // namespace

TrainOutput train_attributes(const ColorTarget& targets, const NetworkArch& arch, const AttrTrainConfig& config,
                             std::uint64_t originalPoints, const std::optional<NetworkParams<float>>& reference,
                             bool freshInit) {
  if (arch.inputDim != 3) throw Error(ErrorKind::InvalidArgument, "static attributes need a 3D network");
  return train_color(std::span<const ColorTarget>(&targets, 1), arch, config, originalPoints, reference, freshInit, 1);
}

TrainOutput train_attributes_curve(std::span<const ColorTarget> frames, const NetworkArch& arch,
                                   const AttrTrainConfig& config, std::uint64_t originalPoints, int controlPoints) {
  if (arch.inputDim != 3) throw Error(ErrorKind::InvalidArgument, "curve attributes need a 3D network");
  if (controlPoints < 2) throw Error(ErrorKind::InvalidArgument, "a curve needs at least two control points");
  return train_color(frames, arch, config, originalPoints, std::nullopt, false, controlPoints);
}

TrainOutput train_attributes_4d(std::span<const ColorTarget> frames, const NetworkArch& arch,
                                const AttrTrainConfig& config, std::uint64_t originalPoints) {
  if (!(arch.inputDim == 4 || (arch.inputDim == 3 && frames.size() == 1)))
    throw Error(ErrorKind::InvalidArgument, "spatio-temporal attributes need a 4D network");
  return train_color(frames, arch, config, originalPoints, std::nullopt, false, 1);
}

std::vector<Rgb> predict_colors(const NetworkParams<float>& params, std::span<const Voxel> voxels,
                                int resolutionBits, double time) {
  if (params.arch.outputDim != 3) throw Error(ErrorKind::InvalidArgument, "color network needs three outputs");
  std::vector<Rgb> out(voxels.size());
  // Bounded working set; predict() itself pads to fixed chunks.
  constexpr std::size_t kSlice = 64 * static_cast<std::size_t>(kInferenceChunk);
  for (std::size_t lo = 0; lo < voxels.size(); lo += kSlice) {
    const auto part = voxels.subspan(lo, std::min(kSlice, voxels.size() - lo));
    const MatrixX<float> c = predict(params, encode_inputs_at(params.arch, part, resolutionBits, time));
    for (std::size_t i = 0; i < part.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      out[lo + i] = {color_to_byte(c(0, col)), color_to_byte(c(1, col)), color_to_byte(c(2, col))};
    }
  }
  return out;
}

VoxelizedCloud reconstruct_attributes(const NetworkParams<float>& params, const VoxelizedCloud& reconstructed,
                                      double time) {
  return reconstructed.with_colors(
      predict_colors(params, reconstructed.points(), reconstructed.resolution_bits(), time));
}

}  // namespace pcinr
