#include "minimano/nfvi/guest.hpp"

#include "minimano/common/error.hpp"

namespace minimano::nfvi {

std::string normalize_guest_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i <= path.size()) {
    const std::size_t slash = path.find('/', i);
    const std::size_t end = slash == std::string_view::npos ? path.size() : slash;
    std::string_view part = path.substr(i, end - i);
    if (part == "..") {
      if (parts.empty()) throw Error(ErrorKind::invalid_argument, "path escapes the guest root: " + std::string(path));
      parts.pop_back();
    } else if (!part.empty() && part != ".") {
      parts.emplace_back(part);
    }
    i = end + 1;
  }
  if (parts.empty()) throw Error(ErrorKind::invalid_argument, "empty guest path");
  std::string out;
  for (const auto& p : parts) out += '/' + p;
  return out;
}

std::vector<std::string> split_shell_words(std::string_view line) {
  std::vector<std::string> words;
  std::string cur;
  bool in_word = false;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == ' ' || c == '\t') {
      if (in_word) words.push_back(std::move(cur)), cur.clear(), in_word = false;
      ++i;
    } else if (c == '\'') {
      const auto close = line.find('\'', i + 1);
      if (close == std::string_view::npos) throw Error(ErrorKind::syntax, "unterminated single quote");
      cur.append(line.substr(i + 1, close - i - 1));
      in_word = true;
      i = close + 1;
    } else if (c == '"') {
      ++i;
      bool closed = false;
      while (i < line.size()) {
        const char d = line[i];
        if (d == '"') {
          closed = true;
          ++i;
          break;
        }
        if (d == '\\' && i + 1 < line.size() && std::string_view("\"\\$`").find(line[i + 1]) != std::string_view::npos) {
          cur.push_back(line[i + 1]);
          i += 2;
          continue;
        }
        cur.push_back(d);
        ++i;
      }
      if (!closed) throw Error(ErrorKind::syntax, "unterminated double quote");
      in_word = true;
    } else if (c == '\\' && i + 1 < line.size()) {
      cur.push_back(line[i + 1]);
      in_word = true;
      i += 2;
    } else {
      cur.push_back(c);
      in_word = true;
      ++i;
    }
  }
  if (in_word) words.push_back(std::move(cur));
  return words;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void run_echo(std::string_view args, EphemeralDisk& disk, std::string& log) {
  // Find an unquoted redirection operator.
  std::size_t redirect = std::string_view::npos;
  bool append = false;
  char quote = 0;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const char c = args[i];
    if (quote) {
      if (c == '\\' && quote == '"') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '\\') {
      ++i;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      redirect = i;
      append = i + 1 < args.size() && args[i + 1] == '>';
      break;
    }
  }
  const auto words = split_shell_words(args.substr(0, redirect));
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) text += ' ';
    text += words[i];
  }
  if (redirect == std::string_view::npos) {
    log += text + '\n';
    return;
  }
  const auto target = split_shell_words(args.substr(redirect + (append ? 2 : 1)));
  if (target.size() != 1) throw Error(ErrorKind::syntax, "redirection needs exactly one file name");
  const std::string path = normalize_guest_path(target.front());
  auto& file = disk.files[path];
  if (!append) file.clear();
  file += text + '\n';
  log += "wrote " + path + '\n';
}

}  // namespace

std::string run_user_data(std::string_view script, EphemeralDisk& disk, const SignalSink& sink) {
  std::string log;
  std::size_t pos = 0;
  bool first = true;
  while (pos < script.size()) {
    std::size_t nl = script.find('\n', pos);
    if (nl == std::string_view::npos) nl = script.size();
    const std::string_view line = trim(script.substr(pos, nl - pos));
    pos = nl + 1;
    const bool shebang = first && line.starts_with("#!");
    first = false;
    if (line.empty()) continue;
    log += "+ " + std::string(line) + '\n';
    if (shebang || line.front() == '#') continue;
    try {
      if (line == "echo" || line.starts_with("echo ") || line.starts_with("echo\t")) {
        run_echo(line.substr(4), disk, log);
      } else if (line.starts_with("signal ") || line.starts_with("signal\t")) {
        std::string_view rest = trim(line.substr(7));
        const auto space = rest.find_first_of(" \t");
        if (space == std::string_view::npos) throw Error(ErrorKind::syntax, "signal needs a URL and a payload");
        const std::string url(rest.substr(0, space));
        const std::string payload(trim(rest.substr(space)));
        log += (sink ? sink(url, payload) : std::string("no signal endpoint reachable")) + '\n';
      } else {
        log += "unsupported command\n";
      }
    } catch (const Error& e) {
      log += std::string("error: ") + e.what() + '\n';
    }
  }
  return log;
}

}  // namespace minimano::nfvi
