#include <iostream>
#include <string>
#include <vector>

#include "minimano/cli/cli.hpp"

extern char** environ;

int main(int argc, char** argv) {
  minimano::cli::Env env;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv(*e);
    const auto eq = kv.find('=');
    if (eq != std::string::npos) env.emplace(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return minimano::cli::run(std::vector<std::string>(argv + 1, argv + argc), env, std::cout, std::cerr);
}
