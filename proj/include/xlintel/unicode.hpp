#ifndef XLINTEL_UNICODE_HPP_
#define XLINTEL_UNICODE_HPP_

#include <string>
#include <string_view>

namespace xlintel::unicode {

// Malformed sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);
void append_utf8(std::string& out, char32_t cp);

// Simple (one-to-one) lowercase mapping for Latin, Greek and Cyrillic.
char32_t to_lower(char32_t cp);

// Letters and digits of any script, plus '_'.
bool is_word_char(char32_t cp);

}  // namespace xlintel::unicode

#endif  // XLINTEL_UNICODE_HPP_
