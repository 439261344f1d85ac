#pragma once

#include <string>

namespace psd {

// Shortest round-trip decimal form; identical bits always give identical text.
std::string format_double(double v);

}  // namespace psd
