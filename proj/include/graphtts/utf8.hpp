#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace graphtts::utf8 {

class DecodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Strict decode: rejects overlong forms, surrogates and truncated sequences.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view scalars);
std::string encode(char32_t scalar);

/// Unicode White_Space property.
bool is_space(char32_t c);

}  // namespace graphtts::utf8
