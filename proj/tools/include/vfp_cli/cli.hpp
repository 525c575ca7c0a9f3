#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vfp/linalg.hpp"

namespace vfp::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kVerificationFailed = 1, kUsage = 2, kCapability = 3 };

/// Runs the tool on `args` (without the program name). Diagnostics go to
/// `err`, listings and summaries to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double x);

/// 64-bit FNV-1a digest, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Static 600x600 SVG: a point scatter, optional vertex markers and an
/// optional polyline, mapped linearly from the data bounding box with a 5%
/// margin. Only the first two components of each vector are used.
std::string render_svg(const std::vector<ValueVector>& scatter, const std::vector<ValueVector>& markers,
                       const std::vector<ValueVector>& path);

}  // namespace vfp::cli
