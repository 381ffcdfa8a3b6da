#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gem/matcher.hpp"

namespace gem {

// Named views of every learnable tensor in the model, in a stable order.
std::vector<std::pair<std::string, Var>> named_parameters(const MatchModel& model);

// Single-archive checkpoint: magic, JSON header (configs, vocabulary, tensor
// manifest), then raw little-endian doubles in manifest order.
void save_checkpoint(const std::string& path, const MatchModel& model);
MatchModel load_checkpoint(const std::string& path);

}  // namespace gem
