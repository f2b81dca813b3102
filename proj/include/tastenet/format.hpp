#pragma once

#include <string>

namespace tastenet {

/// Shortest decimal representation that parses back to the same double.
std::string format_number(double value);

}  // namespace tastenet
