#pragma once

#include <functional>
#include <iosfwd>

namespace figa::cli {

using Getenv = std::function<const char*(const char*)>;

/// Runs one `figa` invocation and returns its exit code:
/// 0 ok, 2 configuration, 3 ingestion, 4 remote service, 5 training divergence, 1 other.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const Getenv& getenv);

}  // namespace figa::cli
