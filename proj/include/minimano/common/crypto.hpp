#pragma once

#include <string>
#include <string_view>

namespace minimano {

std::string sha256_hex(std::string_view data);
std::string sha256_raw(std::string_view data);
std::string base64_encode(std::string_view data);
// Throws Error(invalid_argument) on malformed input.
std::string base64_decode(std::string_view text);

}  // namespace minimano
