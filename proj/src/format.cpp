#include "tastenet/format.hpp"

#include <charconv>
#include <cmath>

namespace tastenet {

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

}  // namespace tastenet
