#include "tastenet/error.hpp"

namespace tastenet {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::argument: return "argument";
    case ErrorKind::schema: return "schema";
    case ErrorKind::parse: return "parse";
    case ErrorKind::data: return "data";
    case ErrorKind::spec: return "spec";
    case ErrorKind::training: return "training";
    case ErrorKind::regression: return "regression";
    case ErrorKind::indicator: return "indicator";
    case ErrorKind::probe: return "probe";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::internal: return "internal";
  }
  return "internal";
}

}  // namespace tastenet
