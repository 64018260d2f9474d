#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "minimano/cli/cli.hpp"
#include "world.hpp"

namespace testsupport {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;

  nlohmann::ordered_json json() const { return nlohmann::ordered_json::parse(out); }
  std::vector<nlohmann::ordered_json> lines() const {
    std::vector<nlohmann::ordered_json> v;
    std::istringstream in(out);
    for (std::string l; std::getline(in, l);)
      if (!l.empty()) v.push_back(nlohmann::ordered_json::parse(l));
    return v;
  }
};

// A scratch directory with its own state file; runs the CLI in-process.
class CliWorkspace {
public:
  CliWorkspace() {
    static int serial = 0;
    dir_ = std::filesystem::temp_directory_path() /
           ("minimano-cli-" + std::to_string(::getpid()) + "-" + std::to_string(serial++));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
    env_["MINIMANO_STATE"] = state().string();
  }
  ~CliWorkspace() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  CliWorkspace(const CliWorkspace&) = delete;
  CliWorkspace& operator=(const CliWorkspace&) = delete;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path state() const { return dir_ / "state.json"; }
  minimano::cli::Env& env() { return env_; }

  CliResult run(const std::vector<std::string>& args) const { return run(args, env_); }
  CliResult run(const std::vector<std::string>& args, const minimano::cli::Env& env) const {
    std::ostringstream out, err;
    CliResult r;
    r.code = minimano::cli::run(args, env, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
  }

  // Runs the real executable; stdout and stderr are captured to files.
  CliResult spawn(const std::vector<std::string>& args, const minimano::cli::Env& extra = {}) const {
    static int serial = 0;
    const auto out_path = dir_ / ("out" + std::to_string(serial));
    const auto err_path = dir_ / ("err" + std::to_string(serial++));
    const pid_t pid = ::fork();
    if (pid == 0) {
      std::vector<std::string> argv_s{MINIMANO_CLI_PATH};
      argv_s.insert(argv_s.end(), args.begin(), args.end());
      std::vector<char*> argv;
      for (auto& s : argv_s) argv.push_back(s.data());
      argv.push_back(nullptr);
      for (const auto& [k, v] : env_) ::setenv(k.c_str(), v.c_str(), 1);
      for (const auto& [k, v] : extra) ::setenv(k.c_str(), v.c_str(), 1);
      if (!std::freopen(out_path.c_str(), "w", stdout) || !std::freopen(err_path.c_str(), "w", stderr)) ::_exit(127);
      ::execv(argv[0], argv.data());
      ::_exit(127);
    }
    return reap(pid, out_path, err_path);
  }

  // Starts the executable without waiting; pair with finish().
  struct Pending {
    pid_t pid;
    std::filesystem::path out, err;
  };
  Pending start(const std::vector<std::string>& args, const minimano::cli::Env& extra = {}) const {
    static int serial = 0;
    Pending p{0, dir_ / ("bg-out" + std::to_string(serial)), dir_ / ("bg-err" + std::to_string(serial))};
    ++serial;
    p.pid = ::fork();
    if (p.pid == 0) {
      std::vector<std::string> argv_s{MINIMANO_CLI_PATH};
      argv_s.insert(argv_s.end(), args.begin(), args.end());
      std::vector<char*> argv;
      for (auto& s : argv_s) argv.push_back(s.data());
      argv.push_back(nullptr);
      for (const auto& [k, v] : env_) ::setenv(k.c_str(), v.c_str(), 1);
      for (const auto& [k, v] : extra) ::setenv(k.c_str(), v.c_str(), 1);
      if (!std::freopen(p.out.c_str(), "w", stdout) || !std::freopen(p.err.c_str(), "w", stderr)) ::_exit(127);
      ::execv(argv[0], argv.data());
      ::_exit(127);
    }
    return p;
  }
  CliResult finish(const Pending& p) const { return reap(p.pid, p.out, p.err); }

  // init, then tenant "demo" with member alice, plus everything the example
  // templates need. Leaves MINIMANO_TOKEN set to alice's token.
  std::string bootstrap_demo() {
    must({"init", "--seed", "42"});
    admin_ = field(must({"--json", "token-issue", "--user", "admin", "--password", "admin", "--tenant", "admin"}), "id");
    with_token(admin_, {"tenant-create", "demo"});
    with_token(admin_, {"user-create", "alice", "--password", "wonderland"});
    with_token(admin_, {"role-assign", "alice", "demo", "member"});
    const auto alice =
        field(must({"--json", "token-issue", "--user", "alice", "--password", "wonderland", "--tenant", "demo"}), "id");
    env_["MINIMANO_TOKEN"] = alice;
    must({"image-create", "ubuntu_cloud14", "--data", "ubuntu"});
    must({"--json", "keypair-create", "my_key1"});
    must({"net-create", "my_net1", "10.0.0.0/24"});
    must({"router-create", "edge"});
    must({"router-interface-add", "edge", "my_net1"});
    must({"router-gateway-set", "edge"});
    return alice;
  }
  const std::string& admin_token() const { return admin_; }

  CliResult must(const std::vector<std::string>& args) const {
    auto r = run(args);
    if (r.code != 0) throw std::runtime_error("cli failed (" + std::to_string(r.code) + "): " + r.err);
    return r;
  }
  CliResult with_token(const std::string& token, std::vector<std::string> args) const {
    args.insert(args.begin(), {"--token", token});
    return must(args);
  }
  static std::string field(const CliResult& r, const char* key) { return r.json().at(key).get<std::string>(); }

private:
  static CliResult reap(pid_t pid, const std::filesystem::path& out, const std::filesystem::path& err) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
    r.out = read_text(out);
    r.err = read_text(err);
    return r;
  }

  std::filesystem::path dir_;
  minimano::cli::Env env_;
  std::string admin_;
};

}  // namespace testsupport
