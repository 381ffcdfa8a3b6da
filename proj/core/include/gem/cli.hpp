#pragma once

#include <string>
#include <vector>

namespace gem {

// Subcommand dispatch: {ingest, serialize, paraphrase, train, eval, augment,
// gate, estimate-cost}. Returns 0 on success, 2 on usage/config errors, 1 on
// runtime failures.
int run_command(const std::vector<std::string>& args);

}  // namespace gem
