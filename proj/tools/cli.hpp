#pragma once

#include "pcinr/container.hpp"
#include "pcinr/error.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pcinr::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitInput = 3,
  kExitEncode = 4,
  kExitCorrupt = 5,
};

enum class Command { Encode, Decode, Eval, Inspect };

/// Runs one command. `args` excludes the program name. Reports and streams go
/// to files; `out` only receives --help text and inspect dumps, `err` gets
/// progress and diagnostics.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Maps a library failure to an exit status. InvalidArgument means a bad
/// parameter for encode, bad input data for eval and a bad stream for
/// decode/inspect.
int exit_code_for(ErrorKind kind, Command command);

/// Parses `key = value` lines. Blank lines and lines starting with '#' are
/// ignored; keys may not repeat. Throws Error(InvalidArgument) naming the line.
std::map<std::string, std::string> parse_config_text(std::string_view text);

struct FrameGroup {
  std::size_t first = 0;
  std::size_t count = 0;
};

/// Consecutive groups of `groupSize` frames; the remainder forms a shorter
/// final group. Static mode codes every frame on its own.
std::vector<FrameGroup> split_groups(std::size_t frames, std::size_t groupSize, CodingMode mode);

/// `output` itself for a single stream, otherwise `stem.gK.ext`.
std::filesystem::path group_output_path(const std::filesystem::path& output, std::size_t group, std::size_t groups);

}  // namespace pcinr::cli
