#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lguided {

// Subcommands: train, eval, attend, sweep-t. stdout carries machine-readable
// JSON/CSV only; logs go to err. Exit codes: 0 success, 2 usage/config error,
// 3 data error, 4 I/O error.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace lguided
