#include "cli.hpp"
#include "fixtures.hpp"
#include "pcinr/ply.hpp"

#include <gtest/gtest.h>

#include <charconv>
#include <fstream>
#include <sstream>

using namespace pcinr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> tiny_encode(const fs::path& in, const fs::path& out) {
  return {"encode", "-i", in.string(), "-o", out.string(), "-N", "4", "-M", "2", "--geometry-steps", "200",
          "--attribute-steps", "100", "--batch-size", "64", "--inter-width", "16", "--intra-width", "8",
          "--spatial-levels", "3", "--sine-frequency", "4", "--learning-rate", "0.01", "--workers", "1"};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void write_cloud(const fs::path& p, const VoxelizedCloud& c) { write_file(p, write_ply(c)); }

}  // namespace

TEST(Cli, ConfigText) {
  const auto m = cli::parse_config_text("# comment\n\nlambda = 5\n  mode=intra  \r\nseed= 3\n");
  EXPECT_EQ(m.at("lambda"), "5");
  EXPECT_EQ(m.at("mode"), "intra");
  EXPECT_EQ(m.at("seed"), "3");
  EXPECT_THROW(cli::parse_config_text("lambda 5\n"), Error);
  EXPECT_THROW(cli::parse_config_text("a=1\na=2\n"), Error);
}

TEST(Cli, Groups) {
  const auto g = cli::split_groups(70, 32, CodingMode::Intra);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g[2].first, 64u);
  EXPECT_EQ(g[2].count, 6u);
  EXPECT_EQ(cli::split_groups(3, 32, CodingMode::Static).size(), 3u);
  EXPECT_EQ(cli::group_output_path("a/b.bin", 0, 1), fs::path("a/b.bin"));
  EXPECT_EQ(cli::group_output_path("a/b.bin", 2, 3), fs::path("a/b.g2.bin"));
}

TEST(Cli, ExitCodeMapping) {
  EXPECT_EQ(cli::exit_code_for(ErrorKind::PlyTruncatedPayload, cli::Command::Encode), cli::kExitInput);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::EmptyReconstruction, cli::Command::Encode), cli::kExitEncode);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::CoderDesync, cli::Command::Decode), cli::kExitCorrupt);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::InvalidArgument, cli::Command::Encode), cli::kExitUsage);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::InvalidArgument, cli::Command::Decode), cli::kExitCorrupt);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"encode", "-o", "x.bin"}).code, cli::kExitUsage);
  const Outcome help = run({"encode", "--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("--steps-scale"), std::string::npos);
  EXPECT_EQ(run({"encode", "-i", "/nonexistent.ply", "-o", "/tmp/x.bin"}).code, cli::kExitInput);
}

TEST(Cli, EncodeDecodeEvalInspect) {
  const fs::path dir = pcinr::testing::temp_dir("cli_roundtrip");
  const VoxelizedCloud cloud = pcinr::testing::sphere_shell(4, 4, 6, true);
  write_cloud(dir / "in.ply", cloud);

  const Outcome enc = run(tiny_encode(dir / "in.ply", dir / "s.bin"));
  ASSERT_EQ(enc.code, 0) << enc.err;
  EXPECT_NE(enc.err.find("seed = 0"), std::string::npos);
  EXPECT_NE(enc.err.find("tau"), std::string::npos);
  EXPECT_NE(enc.err.find("side information (W + tau)"), std::string::npos);

  ASSERT_EQ(run({"decode", "-s", (dir / "s.bin").string(), "-o", (dir / "a.ply").string()}).code, 0);
  ASSERT_EQ(run({"decode", "-s", (dir / "s.bin").string(), "-o", (dir / "b.ply").string()}).code, 0);
  EXPECT_EQ(slurp(dir / "a.ply"), slurp(dir / "b.ply"));

  const Outcome ev = run({"eval", "-a", (dir / "in.ply").string(), "-s", (dir / "s.bin").string(), "-o",
                      (dir / "r.txt").string(), "--csv", (dir / "r.csv").string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  const std::string report = slurp(dir / "r.txt");
  const double bpp = static_cast<double>(fs::file_size(dir / "s.bin") * 8) / static_cast<double>(cloud.size());
  char digits[32];
  const std::string expected = "bpp=" + std::string(digits, std::to_chars(digits, digits + sizeof digits, bpp).ptr);
  EXPECT_NE(report.find(expected + "\n"), std::string::npos) << report;
  EXPECT_NE(report.find("side information (W + tau)"), std::string::npos);
  EXPECT_NE(slurp(dir / "r.csv").find("frame,original_points"), std::string::npos);

  const Outcome self = run({"eval", "-a", (dir / "in.ply").string(), "-b", (dir / "in.ply").string(), "-N", "4", "-o",
                        (dir / "self.txt").string()});
  ASSERT_EQ(self.code, 0);
  const std::string selfReport = slurp(dir / "self.txt");
  EXPECT_NE(selfReport.find("d1_psnr=inf"), std::string::npos);
  EXPECT_NE(selfReport.find("y_psnr=inf"), std::string::npos);
  EXPECT_NE(selfReport.find("bpp=na"), std::string::npos);

  const Outcome ins = run({"inspect", "-s", (dir / "s.bin").string()});
  ASSERT_EQ(ins.code, 0);
  EXPECT_NE(ins.out.find("magic: PINR"), std::string::npos);
  EXPECT_NE(ins.out.find("side information (W + tau)"), std::string::npos);

  // Count mismatch is an input error; a damaged stream is corruption.
  EXPECT_EQ(run({"eval", "-a", (dir / "in.ply").string(), "-a", (dir / "in.ply").string(), "-s",
                 (dir / "s.bin").string(), "-o", (dir / "x.txt").string()})
                .code,
            cli::kExitInput);
  std::string bytes = slurp(dir / "s.bin");
  bytes.resize(bytes.size() - 3);
  std::ofstream(dir / "bad.bin", std::ios::binary) << bytes;
  EXPECT_EQ(run({"decode", "-s", (dir / "bad.bin").string(), "-o", (dir / "c.ply").string()}).code,
            cli::kExitCorrupt);
  EXPECT_EQ(run({"inspect", "-s", (dir / "bad.bin").string()}).code, cli::kExitCorrupt);
}

TEST(Cli, ConfigPrecedence) {
  const fs::path dir = pcinr::testing::temp_dir("cli_config");
  write_cloud(dir / "in.ply", pcinr::testing::sphere_shell(4, 4, 6));
  std::ofstream(dir / "c.cfg") << "# tiny run\nlambda = 7\nseed = 11\n";
  auto args = tiny_encode(dir / "in.ply", dir / "s.bin");
  args.insert(args.end(), {"--config", (dir / "c.cfg").string(), "--seed", "4"});
  const Outcome r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("lambda = 7  (config)"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("seed = 4  (flag)"), std::string::npos);
  EXPECT_NE(r.err.find("gamma = 2  (default)"), std::string::npos);

  std::ofstream(dir / "bad.cfg") << "no-such-key = 1\n";
  args = tiny_encode(dir / "in.ply", dir / "s.bin");
  args.insert(args.end(), {"--config", (dir / "bad.cfg").string()});
  EXPECT_EQ(run(args).code, cli::kExitUsage);
}

TEST(Cli, MultiFrameDecodeAndFailures) {
  const fs::path dir = pcinr::testing::temp_dir("cli_frames");
  write_cloud(dir / "f0.ply", pcinr::testing::sphere_shell(4, 4, 6));
  write_cloud(dir / "f1.ply", pcinr::testing::sphere_shell(4, 3.5, 6));
  auto args = tiny_encode(dir / "f0.ply", dir / "s.bin");
  args.insert(args.end(), {"-i", (dir / "f1.ply").string(), "--mode", "intra", "--geometry-only"});
  ASSERT_EQ(run(args).code, 0);
  ASSERT_EQ(run({"decode", "-s", (dir / "s.bin").string(), "-o", (dir / "out").string()}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "frame_0000.ply"));
  EXPECT_TRUE(fs::exists(dir / "out" / "frame_0001.ply"));

  // Three quarters of the only cube occupied: beta = 0.5 cannot be met.
  std::vector<Voxel> dense;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 3; ++z) dense.emplace_back(x, y, z);
  write_cloud(dir / "dense.ply", VoxelizedCloud(2, dense));
  EXPECT_EQ(run({"encode", "-i", (dir / "dense.ply").string(), "-o", (dir / "d.bin").string(), "-N", "2", "-M", "0",
                 "--geometry-steps", "10"})
                .code,
            cli::kExitEncode);
  EXPECT_EQ(run({"encode", "-i", (dir / "dense.ply").string(), "-o", (dir / "d.bin").string(), "--mode", "warp"})
                .code,
            cli::kExitUsage);
}
