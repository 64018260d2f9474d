#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace minimano::nfvi {

// Per-instance writable disk: an immutable copy of the image payload plus the
// files written by the guest.
struct EphemeralDisk {
  std::string base;
  std::map<std::string, std::string> files;  // absolute path -> contents

  friend bool operator==(const EphemeralDisk&, const EphemeralDisk&) = default;
};

// "hello.txt", "./hello.txt" and "/hello.txt" all name "/hello.txt".
// Throws Error(invalid_argument) for paths that escape the root or are empty.
std::string normalize_guest_path(std::string_view path);

// Splits a shell-ish word list honouring single quotes, double quotes (with
// \" \\ \$ \` escapes) and backslash escapes. Throws on unterminated quotes.
std::vector<std::string> split_shell_words(std::string_view line);

// Delivers a `signal URL PAYLOAD` line; returns a short status for the log.
using SignalSink = std::function<std::string(const std::string& url, const std::string& payload)>;

// Runs boot-time user data. Understood lines:
//   #!...                          shebang on the first line, ignored
//   echo WORDS >> FILE             append WORDS and a newline to FILE
//   echo WORDS > FILE              truncate FILE, then write
//   echo WORDS                     write to the guest log
//   signal URL JSON                deliver a wait-condition signal
// Blank lines and comments are skipped; anything else is logged as
// unsupported and execution continues. Returns the guest log text.
std::string run_user_data(std::string_view script, EphemeralDisk& disk, const SignalSink& sink);

}  // namespace minimano::nfvi
