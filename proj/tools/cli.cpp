#include "cli.hpp"

#include "pcinr/codec.hpp"
#include "pcinr/dynamic.hpp"
#include "pcinr/ply.hpp"
#include "pcinr/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>
#include <variant>

namespace pcinr::cli {

namespace {

namespace fs = std::filesystem;

/// A failure attributable to the command line rather than the library.
struct CliFailure {
  int code;
  std::string message;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Encode settings --------------------------------------------------------

struct EncodeSettings {
  std::vector<std::string> inputs;
  std::string output;
  std::string configPath;

  std::string mode = "static";
  int resolutionBits = 10;
  int cubeBits = 5;
  double lambda = 1.0;
  std::int64_t geometrySteps = 1'200'000;
  std::int64_t attributeSteps = 800'000;
  double stepsScale = 1.0;
  int batchSize = 4096;
  double learningRate = 1e-3;
  double weightDecay = 1e-4;
  double beta = 0.5;
  double gamma = 2.0;
  double geometryStep = 1.0 / 1024;
  double colorStep = 1.0 / 4096;
  int thresholdSteps = 30;
  int groupSize = 32;
  int controlPoints = 3;
  int spatialLevels = 12;
  int temporalLevels = 4;
  int geometryBlocks = 2;
  int colorBlocks = 3;
  int interWidth = 512;
  int intraWidth = 128;
  double sineFrequency = 64.0;
  bool noLayerNorm = false;
  bool freshResidualInit = false;
  bool geometryOnly = false;
  std::uint64_t seed = 0;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::int64_t logEvery = 0;
};

using Target = std::variant<int*, std::int64_t*, std::uint64_t*, double*, std::string*, bool*>;

struct Setting {
  std::string key;
  std::string help;
  Target target;
};

std::vector<Setting> encode_settings(EncodeSettings& s) {
  return {
      {"mode", "static | intra | residual | curve | 4d", &s.mode},
      {"resolution-bits", "voxel grid resolution N (2^N per axis)", &s.resolutionBits},
      {"cube-bits", "cube grid bits M (2^M cubes per axis)", &s.cubeBits},
      {"lambda", "L1 rate weight for both networks", &s.lambda},
      {"geometry-steps", "occupancy network training steps", &s.geometrySteps},
      {"attribute-steps", "color network training steps", &s.attributeSteps},
      {"steps-scale", "multiplies both step counts (0.25 for the short budget)", &s.stepsScale},
      {"batch-size", "training batch size", &s.batchSize},
      {"learning-rate", "initial Adam learning rate", &s.learningRate},
      {"weight-decay", "decoupled Adam weight decay", &s.weightDecay},
      {"beta", "target share of occupied voxels per batch", &s.beta},
      {"gamma", "focal loss focusing parameter", &s.gamma},
      {"geometry-step", "occupancy parameter quantization step", &s.geometryStep},
      {"color-step", "color parameter quantization step", &s.colorStep},
      {"threshold-steps", "golden-section contractions for the threshold", &s.thresholdSteps},
      {"group-size", "frames per coded group (T)", &s.groupSize},
      {"control-points", "Bezier control points per group (P, curve mode)", &s.controlPoints},
      {"spatial-levels", "positional encoding frequencies per spatial axis", &s.spatialLevels},
      {"temporal-levels", "positional encoding frequencies for time (4d mode)", &s.temporalLevels},
      {"geometry-blocks", "residual blocks in the occupancy network", &s.geometryBlocks},
      {"color-blocks", "residual blocks in the color network", &s.colorBlocks},
      {"inter-width", "width between residual blocks", &s.interWidth},
      {"intra-width", "width inside residual blocks", &s.intraWidth},
      {"sine-frequency", "sine activation frequency of the color network", &s.sineFrequency},
      {"no-layer-norm", "disable layer normalization in both networks", &s.noLayerNorm},
      {"fresh-residual-init", "residual mode: train each frame from a fresh initialization", &s.freshResidualInit},
      {"geometry-only", "skip attribute coding even if the input has colors", &s.geometryOnly},
      {"seed", "random seed", &s.seed},
      {"workers", "concurrent frames in intra mode", &s.workers},
      {"log-every", "loss logging interval in steps (0: a tenth of the run)", &s.logEvery},
  };
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw CliFailure{kExitUsage, "config: bad value for " + key + ": " + text};
  return value;
}

void assign(const Setting& setting, const std::string& text) {
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) {
          *p = text;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1" || text == "yes" || text == "on") *p = true;
          else if (text == "false" || text == "0" || text == "no" || text == "off") *p = false;
          else throw CliFailure{kExitUsage, "config: bad value for " + setting.key + ": " + text};
        } else {
          *p = parse_number<T>(setting.key, text);
        }
      },
      setting.target);
}

std::string show(const Target& target) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) return *p;
        else if constexpr (std::is_same_v<T, bool>) return *p ? "true" : "false";
        else if constexpr (std::is_floating_point_v<T>) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "%.10g", *p);
          return buf;
        } else return std::to_string(*p);
      },
      target);
}

std::int64_t scaled_steps(std::int64_t steps, double scale) {
  return std::max<std::int64_t>(1, std::llround(static_cast<double>(steps) * scale));
}

CodecConfig make_codec_config(const EncodeSettings& s) {
  CodecConfig c;
  try {
    c.mode = parse_coding_mode(s.mode);
  } catch (const Error& e) {
    throw CliFailure{kExitUsage, e.what()};
  }
  if (s.stepsScale <= 0) throw CliFailure{kExitUsage, "steps-scale must be positive"};
  if (s.groupSize < 1) throw CliFailure{kExitUsage, "group-size must be at least 1"};
  if (s.workers < 1) throw CliFailure{kExitUsage, "workers must be at least 1"};
  c.cubeBits = s.cubeBits;

  auto arch = [&](NetworkArch a, int blocks) {
    a.posencLevelsSpatial = s.spatialLevels;
    a.residualBlocks = blocks;
    a.interBlockWidth = s.interWidth;
    a.intraBlockWidth = s.intraWidth;
    a.layerNormEnabled = !s.noLayerNorm;
    return a;
  };
  c.geometryArch = arch(NetworkArch::occupancy(), s.geometryBlocks);
  c.colorArch = arch(NetworkArch::color(), s.colorBlocks);
  c.colorArch.sineFrequency = s.sineFrequency;

  auto train = [&](std::int64_t steps) {
    TrainOptions t;
    t.steps = scaled_steps(steps, s.stepsScale);
    t.batchSize = s.batchSize;
    t.lambda = s.lambda;
    t.adam.schedule.initial = s.learningRate;
    t.adam.weightDecay = s.weightDecay;
    t.logEvery = s.logEvery > 0 ? s.logEvery : std::max<std::int64_t>(1, t.steps / 10);
    return t;
  };
  c.geometry.train = train(s.geometrySteps);
  c.geometry.beta = s.beta;
  c.geometry.gamma = s.gamma;
  c.geometry.stepSize = s.geometryStep;
  c.geometry.thresholdSteps = s.thresholdSteps;
  c.attributes.train = train(s.attributeSteps);
  c.attributes.stepSize = s.colorStep;
  c.controlPoints = s.controlPoints;
  c.temporalLevels = s.temporalLevels;
  c.freshResidualInit = s.freshResidualInit;
  c.codeAttributes = !s.geometryOnly;
  c.seed = s.seed;
  c.workers = static_cast<std::size_t>(s.workers);
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

std::vector<std::byte> as_bytes(const std::vector<std::uint8_t>& v) {
  std::vector<std::byte> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](std::uint8_t b) { return std::byte{b}; });
  return out;
}

std::vector<std::uint8_t> read_stream(const fs::path& path) {
  const auto bytes = read_file(path);
  std::vector<std::uint8_t> out(bytes.size());
  std::transform(bytes.begin(), bytes.end(), out.begin(), [](std::byte b) { return std::to_integer<std::uint8_t>(b); });
  return out;
}

// Commands --------------------------------------------------------------

int cmd_encode(EncodeSettings& s, CLI::App& sub, const std::vector<Setting>& settings, std::ostream& err) {
  std::map<std::string, std::string> source;
  for (const auto& st : settings) source[st.key] = sub.get_option("--" + st.key)->count() ? "flag" : "default";
  if (!s.configPath.empty()) {
    std::string text;
    {
      std::ifstream f(s.configPath, std::ios::binary);
      if (!f) throw CliFailure{kExitUsage, "cannot read config file " + s.configPath};
      text.assign(std::istreambuf_iterator<char>(f), {});
    }
    std::map<std::string, std::string> entries;
    try {
      entries = parse_config_text(text);
    } catch (const Error& e) {
      throw CliFailure{kExitUsage, s.configPath + ": " + e.what()};
    }
    for (const auto& [key, value] : entries) {
      const auto it = std::find_if(settings.begin(), settings.end(), [&](const Setting& st) { return st.key == key; });
      if (it == settings.end()) throw CliFailure{kExitUsage, s.configPath + ": unknown key " + key};
      if (source[key] == "flag") continue;
      assign(*it, value);
      source[key] = "config";
    }
  }

  err << "encode settings:\n";
  for (const auto& st : settings) err << "  " << st.key << " = " << show(st.target) << "  (" << source[st.key] << ")\n";

  CodecConfig config = make_codec_config(s);
  std::mutex logMutex;
  config.log = [&err](const std::string& m) { err << "  " << m << "\n"; };
  auto progress = [&](const char* what) {
    return [&err, &logMutex, what](std::int64_t step, double loss) {
      const std::lock_guard lock(logMutex);
      err << "  " << what << " step " << step << " loss " << loss << "\n";
    };
  };
  config.geometry.train.progress = progress("geometry");
  config.attributes.train.progress = progress("attribute");

  std::vector<VoxelizedCloud> frames;
  std::vector<VoxelTransform> transforms;
  std::vector<std::size_t> originalSizes;
  for (const auto& path : s.inputs) {
    VoxelizeResult v = voxelize(read_ply_file(path), s.resolutionBits);
    err << "read " << path << ": " << v.cloud.size() << " voxels" << (v.cloud.has_colors() ? " with colors" : "")
        << "\n";
    frames.push_back(std::move(v.cloud));
    transforms.push_back(v.transform);
  }

  const auto groups = split_groups(frames.size(), static_cast<std::size_t>(s.groupSize), config.mode);
  std::uint64_t totalBytes = 0, totalPoints = 0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const FrameGroup& g = groups[k];
    CodecConfig groupConfig = config;
    if (groupConfig.mode == CodingMode::Curve) {
      if (g.count < 2) {
        err << "group " << k << ": a single frame cannot carry a curve, coding it intra\n";
        groupConfig.mode = CodingMode::Intra;
      } else if (static_cast<std::size_t>(groupConfig.controlPoints) > g.count) {
        groupConfig.controlPoints = static_cast<int>(g.count);
        err << "group " << k << ": control points reduced to " << g.count << "\n";
      }
    }
    const fs::path out = group_output_path(s.output, k, groups.size());
    err << "group " << k << ": frames " << g.first << ".." << g.first + g.count - 1 << ", mode "
        << to_string(groupConfig.mode) << ", seed " << groupConfig.seed << "\n";
    const auto start = std::chrono::steady_clock::now();
    const EncodedGroup encoded =
        encode_group(std::span(frames).subspan(g.first, g.count), std::span(transforms).subspan(g.first, g.count),
                     groupConfig);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(out, as_bytes(encoded.stream));

    std::uint64_t points = 0;
    for (std::size_t t = 0; t < g.count; ++t) points += frames[g.first + t].size();
    totalBytes += encoded.stream.size();
    totalPoints += points;
    char line[160];
    std::snprintf(line, sizeof line, "group %zu: %zu bytes, %.6f bpp, %.2f s, written to ", k, encoded.stream.size(),
                  bits_per_point(encoded.stream.size(), points), seconds);
    err << line << out.string() << "\n";
    err << describe_shares(summarize(encoded.parts));
  }
  if (groups.size() > 1) err << "all groups: " << totalBytes << " bytes, " << bits_per_point(totalBytes, totalPoints)
                             << " bpp\n";
  return kExitOk;
}

int cmd_decode(const std::string& streamPath, const std::string& output, bool devoxelized, std::ostream& err) {
  const DecodedGroup decoded = decode_group(read_stream(streamPath));
  const std::size_t frames = decoded.frames.size();
  const fs::path out(output);
  const bool single = frames == 1 && out.extension() == ".ply";
  if (!single) fs::create_directories(out);
  for (std::size_t t = 0; t < frames; ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.ply", t);
    const fs::path path = single ? out : out / name;
    const VoxelizedCloud& cloud = decoded.frames[t];
    write_file(path, devoxelized ? write_ply(devoxelize(cloud, decoded.transforms[t])) : write_ply(cloud));
    err << "frame " << t << ": " << cloud.size() << " points, tau " << decoded.frameInfo[t].tau() << " -> "
        << path.string() << "\n";
  }
  return kExitOk;
}

struct EvalSettings {
  std::vector<std::string> originals;
  std::vector<std::string> reconstructed;
  std::vector<std::string> streams;
  int resolutionBits = 10;
  std::string report;
  std::string csv;
};

int cmd_eval(const EvalSettings& s, std::ostream& err) {
  if (s.reconstructed.empty() == s.streams.empty())
    throw CliFailure{kExitUsage, "eval needs either --reconstructed or --stream"};
  std::vector<VoxelizedCloud> reconstructed;
  std::optional<std::uint64_t> streamBytes;
  StreamSummary shares;  // summed over all streams
  int resolution = s.resolutionBits;
  if (!s.streams.empty()) {
    streamBytes = 0;
    std::optional<int> streamResolution;
    for (const auto& path : s.streams) {
      const auto bytes = read_stream(path);
      *streamBytes += bytes.size();
      DecodedGroup g = decode_group(bytes);
      const StreamSummary one = summarize(disassemble(bytes));
      shares.totalBytes += one.totalBytes;
      shares.containerBytes += one.containerBytes;
      shares.cubeMapBytes += one.cubeMapBytes;
      shares.thresholdBytes += one.thresholdBytes;
      shares.transformBytes += one.transformBytes;
      shares.geometryBytes += one.geometryBytes;
      shares.attributeBytes += one.attributeBytes;
      if (streamResolution && *streamResolution != g.header.resolutionBits)
        throw CliFailure{kExitInput, "streams use different resolutions"};
      streamResolution = g.header.resolutionBits;
      for (auto& f : g.frames) reconstructed.push_back(std::move(f));
    }
    resolution = *streamResolution;
  } else {
    for (const auto& path : s.reconstructed) reconstructed.push_back(voxelize(read_ply_file(path), resolution).cloud);
  }
  if (reconstructed.size() != s.originals.size())
    throw CliFailure{kExitInput, "frame count mismatch: " + std::to_string(s.originals.size()) + " originals vs " +
                                     std::to_string(reconstructed.size()) + " reconstructed frames"};
  std::vector<VoxelizedCloud> originals;
  for (const auto& path : s.originals) originals.push_back(voxelize(read_ply_file(path), resolution).cloud);

  const MetricsReport report = evaluate(originals, reconstructed, streamBytes);
  std::string text = format_report(report);
  if (streamBytes) text += "\n[rate shares]\n" + describe_shares(shares);
  write_text(s.report, text);
  if (!s.csv.empty()) write_text(s.csv, format_report_csv(report));
  err << "aggregate D1 " << report.aggregate.d1.str() << " dB over " << report.frames.size() << " frames -> "
      << s.report << "\n";
  if (streamBytes) err << describe_shares(shares);
  return kExitOk;
}

int cmd_inspect(const std::string& streamPath, std::ostream& out) {
  out << describe_stream(disassemble(read_stream(streamPath)));
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorKind kind, Command command) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      switch (command) {
        case Command::Encode: return kExitUsage;
        case Command::Eval: return kExitInput;
        default: return kExitCorrupt;
      }
    case ErrorKind::PlyMalformedHeader:
    case ErrorKind::PlyUnsupportedProperty:
    case ErrorKind::PlyTruncatedPayload:
    case ErrorKind::DegenerateInput:
    case ErrorKind::Io: return kExitInput;
    case ErrorKind::SamplingInfeasible:
    case ErrorKind::EmptyReconstruction:
    case ErrorKind::ShapeMismatch: return kExitEncode;
    case ErrorKind::StreamBadMagic:
    case ErrorKind::StreamVersion:
    case ErrorKind::StreamOverrun:
    case ErrorKind::StreamMalformed:
    case ErrorKind::CoderExhausted:
    case ErrorKind::CoderDesync: return kExitCorrupt;
  }
  return kExitEncode;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t lineNo = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineNo;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(lineNo);
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, where + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::InvalidArgument, where + ": empty key");
    if (!out.emplace(key, value).second) throw Error(ErrorKind::InvalidArgument, where + ": repeated key " + key);
  }
  return out;
}

std::vector<FrameGroup> split_groups(std::size_t frames, std::size_t groupSize, CodingMode mode) {
  if (mode == CodingMode::Static) groupSize = 1;
  if (groupSize == 0) throw Error(ErrorKind::InvalidArgument, "group size must be positive");
  std::vector<FrameGroup> groups;
  for (std::size_t first = 0; first < frames; first += groupSize)
    groups.push_back({first, std::min(groupSize, frames - first)});
  return groups;
}

fs::path group_output_path(const fs::path& output, std::size_t group, std::size_t groups) {
  if (groups <= 1) return output;
  fs::path p = output;
  p.replace_filename(output.stem().string() + ".g" + std::to_string(group) + output.extension().string());
  return p;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point cloud codec based on coordinate networks"};
  app.name("pcinr");
  app.require_subcommand(1);

  EncodeSettings enc;
  CLI::App* encode = app.add_subcommand("encode", "Encode PLY frames into coded streams");
  encode->add_option("-i,--input", enc.inputs, "input PLY files, one per frame, in order")->required();
  encode->add_option("-o,--output", enc.output, "output stream path")->required();
  encode->add_option("--config", enc.configPath, "key = value file; flags take precedence over it");
  const std::vector<Setting> settings = encode_settings(enc);
  for (const auto& st : settings) {
    std::string name = "--" + st.key;
    if (st.key == "resolution-bits") name = "-N," + name;
    if (st.key == "cube-bits") name = "-M," + name;
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, bool>) encode->add_flag(name, *p, st.help);
          else encode->add_option(name, *p, st.help)->capture_default_str();
        },
        st.target);
  }

  std::string streamPath, decodeOutput;
  bool devoxelized = false;
  CLI::App* decode = app.add_subcommand("decode", "Decode a stream into one PLY per frame");
  decode->add_option("-s,--stream", streamPath, "coded stream")->required();
  decode->add_option("-o,--output", decodeOutput,
                     "a .ply path for single-frame streams, otherwise a directory receiving frame_NNNN.ply")
      ->required();
  decode->add_flag("--devoxelize", devoxelized, "write world coordinates instead of voxel indices");

  EvalSettings ev;
  CLI::App* eval = app.add_subcommand("eval", "Compare reconstructions with the originals");
  eval->add_option("-a,--original", ev.originals, "original PLY files in frame order")->required();
  eval->add_option("-b,--reconstructed", ev.reconstructed, "reconstructed PLY files in voxel coordinates");
  eval->add_option("-s,--stream", ev.streams, "coded streams to decode; enables bpp");
  eval->add_option("-N,--resolution-bits", ev.resolutionBits, "grid resolution when no stream is given")
      ->capture_default_str();
  eval->add_option("-o,--report", ev.report, "key = value report file")->required();
  eval->add_option("--csv", ev.csv, "optional CSV with one row per frame");

  std::string inspectPath;
  CLI::App* inspect = app.add_subcommand("inspect", "Print the header and section sizes of a stream");
  inspect->add_option("-s,--stream", inspectPath, "coded stream")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Command command = Command::Encode;
  if (decode->parsed()) command = Command::Decode;
  if (eval->parsed()) command = Command::Eval;
  if (inspect->parsed()) command = Command::Inspect;
  try {
    switch (command) {
      case Command::Encode: return cmd_encode(enc, *encode, settings, err);
      case Command::Decode: return cmd_decode(streamPath, decodeOutput, devoxelized, err);
      case Command::Eval: return cmd_eval(ev, err);
      case Command::Inspect: return cmd_inspect(inspectPath, out);
    }
  } catch (const CliFailure& f) {
    err << "error: " << f.message << "\n";
    return f.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind(), command);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return command == Command::Encode ? kExitEncode : kExitInput;
  }
  return kExitUsage;
}

}  // namespace pcinr::cli
