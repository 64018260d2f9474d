#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "minimano/common/error.hpp"
#include "minimano/common/ordered_map.hpp"
#include "minimano/common/value.hpp"

namespace minimano::cli {

using Env = std::map<std::string, std::string>;

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAuth = 3;
inline constexpr int kExitDeploy = 4;
inline constexpr int kExitIo = 5;
inline constexpr int kExitNotFound = 6;

int exit_code_for(ErrorKind kind) noexcept;

// "a=1,b=two" and repeated items both work; later keys win.
OrderedMap<Value> parse_parameters(const std::vector<std::string>& items);

// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, const Env& env, std::ostream& out, std::ostream& err);

}  // namespace minimano::cli
