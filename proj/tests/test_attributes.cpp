#include "fixtures.hpp"
#include "pcinr/attributes.hpp"
#include "pcinr/kdtree.hpp"

#include <gtest/gtest.h>

using namespace pcinr;
using pcinr::testing::random_cloud;
using pcinr::testing::tiny_arch;

TEST(Attributes, ColorByteRounding) {
  EXPECT_EQ(color_to_byte(0.0f), 0);
  EXPECT_EQ(color_to_byte(1.0f), 255);
  EXPECT_EQ(color_to_byte(-0.2f), 0);
  EXPECT_EQ(color_to_byte(1.3f), 255);
  EXPECT_EQ(color_to_byte(0.5f), 128);  // 127.5 rounds up
  EXPECT_EQ(color_to_byte(100.4f / 255.0f), 100);
}

TEST(Attributes, TargetsFollowNearestOriginal) {
  // Oracle: exhaustive scan with the lexicographic tie-break.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const VoxelizedCloud original = random_cloud(4, 30, seed, true);
    const VoxelizedCloud recon = random_cloud(4, 50, seed + 10);
    const ColorTarget t = build_color_targets(recon, original);
    ASSERT_EQ(t.colors.size(), recon.size());
    for (std::size_t i = 0; i < recon.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < original.size(); ++j) {
        const auto dj = squared_distance(recon.points()[i], original.points()[j]);
        const auto db = squared_distance(recon.points()[i], original.points()[best]);
        if (dj < db) best = j;  // points are sorted, so the first minimum is the smallest coordinate
      }
      const Rgb c = original.colors()[best];
      EXPECT_FLOAT_EQ(t.colors[i].x(), c.r / 255.0f);
      EXPECT_FLOAT_EQ(t.colors[i].z(), c.b / 255.0f);
    }
  }
}

TEST(Attributes, ConstantColorConverges) {
  const VoxelizedCloud x = random_cloud(4, 60, 3);
  const VoxelizedCloud colored = x.with_colors(std::vector<Rgb>(x.size(), Rgb{180, 40, 90}));
  AttrTrainConfig cfg;
  cfg.train.steps = 600;
  cfg.train.batchSize = 64;
  cfg.train.adam.schedule.initial = 1e-2;
  const TrainOutput out =
      train_attributes(build_color_targets(x, colored), tiny_arch(Activation::Sine, 3), cfg, x.size());
  const auto colors = predict_colors(out.nets[0], x.points(), 4);
  for (const Rgb& c : colors) {
    EXPECT_NEAR(c.r, 180, 2);
    EXPECT_NEAR(c.g, 40, 2);
    EXPECT_NEAR(c.b, 90, 2);
  }
}

TEST(Attributes, PredictionIsDeterministicAndBatchInvariant) {
  const VoxelizedCloud x = random_cloud(6, 1500, 1);
  CounterRng rng(4, 0);
  const NetworkParams<float> net = initialize_network(tiny_arch(Activation::Sine, 3), rng);
  const auto all = predict_colors(net, x.points(), 6);
  for (std::size_t i : {0u, 700u, 1499u}) {
    const auto one = predict_colors(net, std::span(x.points()).subspan(i, 1), 6);
    EXPECT_EQ(one[0], all[i]);
  }
  const VoxelizedCloud r = reconstruct_attributes(net, x);
  EXPECT_EQ(r.colors(), all);
  EXPECT_EQ(r.points(), x.points());
}

TEST(Attributes, TrainingIsSeedDeterministic) {
  const VoxelizedCloud x = random_cloud(4, 40, 8, true);
  AttrTrainConfig cfg;
  cfg.train.steps = 50;
  cfg.train.batchSize = 32;
  const ColorTarget t = build_color_targets(x.without_colors(), x);
  const NetworkArch arch = tiny_arch(Activation::Sine, 3);
  EXPECT_EQ(train_attributes(t, arch, cfg, x.size()).nets[0].values,
            train_attributes(t, arch, cfg, x.size()).nets[0].values);
  AttrTrainConfig other = cfg;
  other.train.seed = 1;
  EXPECT_NE(train_attributes(t, arch, cfg, x.size()).nets[0].values,
            train_attributes(t, arch, other, x.size()).nets[0].values);
}
