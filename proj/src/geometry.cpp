#include "pcinr/geometry.hpp"

#include "pcinr/error.hpp"
#include "pcinr/metrics.hpp"

#include <limits>
#include <numeric>

namespace pcinr {

SamplingPlan make_sampling_plan(std::uint64_t occupied, std::uint64_t candidates, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorKind::InvalidArgument, "beta must lie in (0, 1)");
  if (candidates == 0 || occupied > candidates)
    throw Error(ErrorKind::InvalidArgument, "occupied voxels must be a subset of a nonempty candidate set");
  SamplingPlan plan;
  plan.beta = beta;
  plan.zeta = static_cast<double>(occupied) / static_cast<double>(candidates);
  if (beta < plan.zeta)
    throw Error(ErrorKind::SamplingInfeasible,
                "occupied share beta=" + std::to_string(beta) + " is below the true occupancy zeta=" +
                    std::to_string(plan.zeta) + "; raise beta or lower the cube bits M");
  plan.betaStar = (beta - plan.zeta) / (1.0 - plan.zeta);
  plan.alphaStar = (1.0 - beta) / (1.0 - plan.zeta);
  return plan;
}

SamplingPlan make_sampling_plan(const VoxelizedCloud& cloud, const CubeSet& cubeSet, double beta) {
  return make_sampling_plan(cloud.size(), candidate_count(cubeSet), beta);
}

TrainingSample sample_training_voxel(const SamplingPlan& plan, const VoxelizedCloud& cloud,
                                     const CubeSet& cubeSet, CounterRng& rng) {
  if (rng.uniform() < plan.betaStar) return {cloud.points()[rng.below(cloud.size())], 1};
  const Voxel v = sample_candidate(cubeSet, rng);
  return {v, cloud.find(v).has_value() ? 1 : 0};
}

GeometrySampler::GeometrySampler(std::span<const VoxelizedCloud> frames, std::span<const CubeSet> cubeSets,
                                 double beta)
    : frames_(frames), cubeSets_(cubeSets) {
  if (frames.empty() || frames.size() != cubeSets.size())
    throw Error(ErrorKind::InvalidArgument, "one cube set per frame required");
  pointOffsets_.push_back(0);
  cubeOffsets_.push_back(0);
  std::uint64_t candidates = 0;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].empty()) throw Error(ErrorKind::InvalidArgument, "cannot train on an empty frame");
    framePlans_.push_back(make_sampling_plan(frames[t], cubeSets[t], beta));
    pointOffsets_.push_back(pointOffsets_.back() + frames[t].size());
    cubeOffsets_.push_back(cubeOffsets_.back() + cubeSets[t].size());
    candidates += candidate_count(cubeSets[t]);
  }
  unionPlan_ = make_sampling_plan(pointOffsets_.back(), candidates, beta);
}

TrainingSample GeometrySampler::draw(CounterRng& rng) const {
  auto frame_of = [](const std::vector<std::uint64_t>& offsets, std::uint64_t i) {
    return static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), i) - offsets.begin() - 1);
  };
  if (rng.uniform() < unionPlan_.betaStar) {
    const std::uint64_t i = rng.below(pointOffsets_.back());
    const std::size_t t = frame_of(pointOffsets_, i);
    return {frames_[t].points()[i - pointOffsets_[t]], 1, t};
  }
  // Cubes hold equally many voxels, so a uniform cube then a uniform local
  // offset is uniform over the union of candidate sets.
  const std::uint64_t c = rng.below(cubeOffsets_.back());
  const std::size_t t = frame_of(cubeOffsets_, c);
  const CubeSet& cubes = cubeSets_[t];
  const std::uint64_t edge = static_cast<std::uint64_t>(cubes.grid().cube_edge());
  const auto lx = static_cast<std::int32_t>(rng.below(edge));
  const auto ly = static_cast<std::int32_t>(rng.below(edge));
  const auto lz = static_cast<std::int32_t>(rng.below(edge));
  const Voxel v = Voxel(lx, ly, lz) + cubes.cubes()[c - cubeOffsets_[t]] * cubes.grid().cube_edge();
  return {v, frames_[t].find(v).has_value() ? 1 : 0, t};
}

TrainingSample GeometrySampler::draw_in_frame(std::size_t frame, CounterRng& rng) const {
  TrainingSample s = sample_training_voxel(framePlans_.at(frame), frames_[frame], cubeSets_[frame], rng);
  s.frame = frame;
  return s;
}

double focal_loss(double p, int label, double alpha, double gamma) {
  p = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const double pt = label ? p : 1.0 - p;
  const double at = label ? alpha : 1.0 - alpha;
  return -at * std::pow(1.0 - pt, gamma) * std::log(pt);
}

double focal_logit_gradient(double z, int label, double alpha, double gamma) {
  // With s = +-1 and q = sigmoid(s z):
  //   dL/dz = s a (1 - q)^gamma (gamma q log q - (1 - q)).
  const double s = label ? 1.0 : -1.0;
  const double at = label ? alpha : 1.0 - alpha;
  const double sz = s * z;
  const double q = sigmoid(sz);
  const double oneMinusQ = sigmoid(-sz);
  const double logQ = sz >= 0 ? -std::log1p(std::exp(-sz)) : sz - std::log1p(std::exp(sz));
  return s * at * std::pow(oneMinusQ, gamma) * (gamma * q * logQ - oneMinusQ);
}

namespace {

void fill_geometry_batch(const NetworkArch& arch, int resolutionBits, std::vector<TrainingSample>& samples,
                         std::int64_t frames, Batch& batch) {
  std::vector<Voxel> voxels(samples.size());
  std::vector<double> times;
  batch.labels.resize(static_cast<Eigen::Index>(samples.size()));
  if (arch.inputDim == 4) times.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    voxels[i] = samples[i].voxel;
    batch.labels[static_cast<Eigen::Index>(i)] = samples[i].label;
    if (!times.empty()) times[i] = normalize_time(static_cast<std::int64_t>(samples[i].frame), frames);
  }
  batch.inputs = encode_inputs(arch, voxels, resolutionBits, times);
}

LossSpec focal_spec(const GeomTrainConfig& config) {
  if (config.gamma < 0) throw Error(ErrorKind::InvalidArgument, "focal gamma must be non-negative");
  return {LossKind::Focal, 1.0 - config.beta, config.gamma};
}

std::uint64_t total_points(std::span<const VoxelizedCloud> frames) {
  std::uint64_t n = 0;
  for (const auto& f : frames) n += f.size();
  return n;
}

TrainOutput train_occupancy(std::span<const VoxelizedCloud> frames, std::span<const CubeSet> cubeSets,
                            const NetworkArch& arch, const GeomTrainConfig& config,
                            const std::optional<NetworkParams<float>>& reference, bool freshInit,
                            int controlPoints) {
  if (arch.outputDim != 1) throw Error(ErrorKind::InvalidArgument, "occupancy network needs one output");
  const GeometrySampler sampler(frames, cubeSets, config.beta);
  const int resolutionBits = frames.front().resolution_bits();
  for (const auto& f : frames)
    if (f.resolution_bits() != resolutionBits)
      throw Error(ErrorKind::InvalidArgument, "frames of a group must share one resolution");

  NetworkParams<float> init;
  if (reference) {
    if (!(reference->arch == arch)) throw Error(ErrorKind::ShapeMismatch, "reference network has another shape");
  }
  if (reference && !freshInit) {
    init = *reference;
  } else {
    CounterRng initRng(config.train.seed, streams::kInit);
    init = initialize_network(arch, initRng);
  }
  std::vector<NetworkParams<float>> start(static_cast<std::size_t>(std::max(1, controlPoints)), init);

  Regularizer regularizer;
  regularizer.weight = config.train.lambda / static_cast<double>(total_points(frames));
  if (reference) regularizer.anchor = reference->values;

  const bool curve = controlPoints > 1;
  const auto frameCount = static_cast<std::int64_t>(frames.size());
  std::vector<TrainingSample> samples;
  const BatchSource source = [&](std::int64_t frame, int size, CounterRng& rng, Batch& batch) {
    samples.resize(static_cast<std::size_t>(size));
    for (auto& s : samples)
      s = curve ? sampler.draw_in_frame(static_cast<std::size_t>(frame), rng) : sampler.draw(rng);
    fill_geometry_batch(arch, resolutionBits, samples, frameCount, batch);
  };
  return train_network(std::move(start), config.train, focal_spec(config), regularizer, frameCount, source);
}

}  // namespace

TrainOutput train_geometry(const VoxelizedCloud& cloud, const CubeSet& cubeSet, const NetworkArch& arch,
                           const GeomTrainConfig& config, const std::optional<NetworkParams<float>>& reference,
                           bool freshInit) {
  if (arch.inputDim != 3) throw Error(ErrorKind::InvalidArgument, "static geometry needs a 3D network");
  return train_occupancy(std::span<const VoxelizedCloud>(&cloud, 1), std::span<const CubeSet>(&cubeSet, 1), arch,
                         config, reference, freshInit, 1);
}

TrainOutput train_geometry_curve(std::span<const VoxelizedCloud> frames, std::span<const CubeSet> cubeSets,
                                 const NetworkArch& arch, const GeomTrainConfig& config, int controlPoints) {
  if (arch.inputDim != 3) throw Error(ErrorKind::InvalidArgument, "curve geometry needs a 3D network");
  if (controlPoints < 2) throw Error(ErrorKind::InvalidArgument, "a curve needs at least two control points");
  return train_occupancy(frames, cubeSets, arch, config, std::nullopt, false, controlPoints);
}

TrainOutput train_geometry_4d(std::span<const VoxelizedCloud> frames, std::span<const CubeSet> cubeSets,
                              const NetworkArch& arch, const GeomTrainConfig& config) {
  if (!(arch.inputDim == 4 || (arch.inputDim == 3 && frames.size() == 1)))
    throw Error(ErrorKind::InvalidArgument, "spatio-temporal geometry needs a 4D network");
  return train_occupancy(frames, cubeSets, arch, config, std::nullopt, false, 1);
}

std::vector<float> occupancy_probabilities(const NetworkParams<float>& params, const CubeSet& cubeSet, double time) {
  const auto range = iterate_candidates(cubeSet);
  const std::uint64_t total = range.size();
  std::vector<float> out(total);
  std::vector<Voxel> chunk;
  chunk.reserve(static_cast<std::size_t>(kInferenceChunk));
  const int bits = cubeSet.grid().resolutionBits;
  std::uint64_t written = 0;
  auto flush = [&] {
    const MatrixX<float> p = predict(params, encode_inputs_at(params.arch, chunk, bits, time));
    for (Eigen::Index i = 0; i < p.cols(); ++i) out[written++] = p(0, i);
    chunk.clear();
  };
  for (const Voxel& v : range) {
    chunk.push_back(v);
    if (chunk.size() == static_cast<std::size_t>(kInferenceChunk)) flush();
  }
  if (!chunk.empty()) flush();
  return out;
}

VoxelizedCloud reconstruct_from_probabilities(const CubeSet& cubeSet, std::span<const float> probabilities,
                                              double tau) {
  const auto range = iterate_candidates(cubeSet);
  if (probabilities.size() != range.size())
    throw Error(ErrorKind::ShapeMismatch, "one probability per candidate voxel required");
  std::vector<Voxel> kept;
  std::size_t i = 0;
  for (const Voxel& v : range) {
    if (static_cast<double>(probabilities[i]) > tau) kept.push_back(v);
    ++i;
  }
  return VoxelizedCloud(cubeSet.grid().resolutionBits, std::move(kept));
}

VoxelizedCloud reconstruct_geometry(const NetworkParams<float>& params, const CubeSet& cubeSet, double tau,
                                    double time) {
  return reconstruct_from_probabilities(cubeSet, occupancy_probabilities(params, cubeSet, time), tau);
}

ThresholdObjective::ThresholdObjective(const CubeSet& cubeSet, std::span<const float> probabilities,
                                       const VoxelizedCloud& original)
    : cubeSet_(cubeSet), original_(original), originalTree_(original.points()) {
  if (original.empty()) throw Error(ErrorKind::InvalidArgument, "threshold search needs a nonempty original");
  if (probabilities.size() != candidate_count(cubeSet))
    throw Error(ErrorKind::ShapeMismatch, "one probability per candidate voxel required");
  order_.resize(probabilities.size());
  std::iota(order_.begin(), order_.end(), std::uint64_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::uint64_t a, std::uint64_t b) { return probabilities[a] > probabilities[b]; });
  sorted_.resize(order_.size());
  for (std::size_t r = 0; r < order_.size(); ++r) sorted_[r] = probabilities[order_[r]];
}

std::size_t ThresholdObjective::selected_count(double tau) const {
  return static_cast<std::size_t>(
      std::partition_point(sorted_.begin(), sorted_.end(), [&](float p) { return static_cast<double>(p) > tau; }) -
      sorted_.begin());
}

std::vector<float> ThresholdObjective::unique_probabilities() const {
  std::vector<float> u(sorted_.rbegin(), sorted_.rend());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

double ThresholdObjective::operator()(double tau) const {
  const std::size_t k = selected_count(tau);
  if (k == 0) return -std::numeric_limits<double>::infinity();
  const auto range = iterate_candidates(cubeSet_);
  std::vector<Voxel> selected(k);
  for (std::size_t r = 0; r < k; ++r) selected[r] = range.at(order_[r]);
  // Distances from candidates to the original never change; extend the cache.
  const std::size_t have = distance_.size();
  if (have < k) {
    distance_.resize(k);
    parallel_for(k - have, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) distance_[have + i] = originalTree_.nearest(selected[have + i]).distance;
    });
  }
  const std::int64_t forward = std::accumulate(distance_.begin(), distance_.begin() + static_cast<std::ptrdiff_t>(k),
                                               std::int64_t{0});
  const double eForward = static_cast<double>(forward) / static_cast<double>(k);
  const double eBackward = p2point_error(original_.points(), KdTree(selected));
  const Psnr psnr = Psnr::from_error(geometry_peak_squared(original_.resolution_bits()), std::max(eForward, eBackward));
  return psnr.is_infinite() ? std::numeric_limits<double>::infinity() : psnr.db();
}

double golden_section_maximize(const std::function<double(double)>& objective, int steps) {
  if (steps < 1) throw Error(ErrorKind::InvalidArgument, "threshold search needs at least one step");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const double c1 = (3.0 - std::sqrt(5.0)) / 2.0;
  const double c2 = (std::sqrt(5.0) - 1.0) / 2.0;
  double l = 0.0, r = 1.0;
  std::optional<double> d1, d2;
  bool anyNonEmpty = false;
  auto eval = [&](double t) {
    const double v = objective(t);
    anyNonEmpty = anyNonEmpty || v != kNegInf;
    return v;
  };
  for (int i = 0; i < steps; ++i) {
    const double m1 = l + c1 * (r - l);
    const double m2 = l + c2 * (r - l);
    if (!d1) d1 = eval(m1);
    if (!d2) d2 = eval(m2);
    if (*d2 != kNegInf && *d1 < *d2) {
      l = m1;
      d1 = d2;
      d2.reset();
    } else {
      r = m2;
      d2 = d1;
      d1.reset();
    }
  }
  if (!anyNonEmpty)
    throw Error(ErrorKind::EmptyReconstruction,
                "every threshold probe reconstructed an empty point set; the occupancy network did not learn");
  return 0.5 * (l + r);
}

std::uint16_t select_threshold_code(const ThresholdObjective& objective, double tau) {
  const std::uint16_t lo = threshold_floor_code(tau);
  const std::uint16_t hi = static_cast<std::uint16_t>(std::min<int>(lo + 1, 65535));
  const double dLo = objective(lo / 65536.0);
  const double dHi = objective(hi / 65536.0);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (dLo == kNegInf && dHi == kNegInf)
    throw Error(ErrorKind::EmptyReconstruction, "the chosen threshold reconstructs an empty point set");
  return dHi > dLo ? hi : lo;
}

ThresholdResult fine_tune_threshold(const CubeSet& cubeSet, std::span<const float> probabilities,
                                    const VoxelizedCloud& original, int steps) {
  const ThresholdObjective objective(cubeSet, probabilities, original);
  ThresholdResult result;
  result.tau = golden_section_maximize([&](double t) { return objective(t); }, steps);
  result.code = select_threshold_code(objective, result.tau);
  result.psnr = objective(result.code / 65536.0);
  return result;
}

ThresholdResult fine_tune_threshold(const NetworkParams<float>& params, const CubeSet& cubeSet,
                                    const VoxelizedCloud& original, int steps, double time) {
  const auto probabilities = occupancy_probabilities(params, cubeSet, time);
  return fine_tune_threshold(cubeSet, probabilities, original, steps);
}

}  // namespace pcinr
