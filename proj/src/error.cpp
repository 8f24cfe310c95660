#include "pcinr/error.hpp"

namespace pcinr {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::PlyMalformedHeader: return "malformed PLY header";
    case ErrorKind::PlyUnsupportedProperty: return "unsupported PLY property";
    case ErrorKind::PlyTruncatedPayload: return "truncated PLY payload";
    case ErrorKind::DegenerateInput: return "degenerate input";
    case ErrorKind::SamplingInfeasible: return "infeasible sampling plan";
    case ErrorKind::EmptyReconstruction: return "empty reconstruction";
    case ErrorKind::StreamBadMagic: return "bad stream magic";
    case ErrorKind::StreamVersion: return "unsupported stream version";
    case ErrorKind::StreamOverrun: return "stream length overrun";
    case ErrorKind::StreamMalformed: return "malformed stream";
    case ErrorKind::CoderExhausted: return "entropy decoder exhausted";
    case ErrorKind::CoderDesync: return "entropy decoder desync";
    case ErrorKind::ShapeMismatch: return "shape mismatch";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

}  // namespace pcinr
