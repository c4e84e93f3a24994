#pragma once

#include <string>
#include <vector>

namespace phaselab::cli {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kNoConvergence = 3,
  kMissingInput = 4,
  kHypothesis = 5,
  kLambdaTooLarge = 6,
};

/// Entry point shared by the executable and the tests; args excludes argv[0].
int run(const std::vector<std::string>& args);

}  // namespace phaselab::cli
