#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lsft {

/// Runs the command-line interface on `args` (program name excluded).
///
/// Returns 0 on success. Failures print one line
///   error: <code>: <message>
/// to `err`, where <code> is one of usage, unknown-method, conflicting-options,
/// missing-file, format, numerical, io. Usage errors exit with 2, all others
/// with 1.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lsft
