#include "nodulemorph/error.hpp"

namespace nodulemorph {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "io error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Label: return "label error";
    case ErrorKind::EmptyMask: return "empty-mask error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Fit: return "fit error";
    case ErrorKind::Resample: return "resample error";
    case ErrorKind::Training: return "training error";
    case ErrorKind::Divergence: return "divergence error";
    case ErrorKind::Stratification: return "stratification error";
    case ErrorKind::Evaluation: return "evaluation error";
    case ErrorKind::Config: return "config error";
  }
  return "error";
}

}  // namespace nodulemorph
