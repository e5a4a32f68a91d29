#include "fxlab/error.hpp"

namespace fxlab {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidSettings: return "invalid settings";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Arity: return "arity error";
    case ErrorKind::CannotNormalize: return "cannot normalize";
    case ErrorKind::TooShort: return "input too short";
    case ErrorKind::State: return "state error";
    case ErrorKind::Conditioning: return "conditioning error";
    case ErrorKind::ChecksumMismatch: return "checksum mismatch";
    case ErrorKind::EmptyInput: return "empty input";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Numerical: return "numerical failure";
    case ErrorKind::Usage: return "usage error";
    }
    return "error";
}

}  // namespace fxlab
