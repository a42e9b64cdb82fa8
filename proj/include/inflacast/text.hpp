#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace inflacast::text {

/// Decode UTF-8 into code points. Invalid bytes become U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

/// Simple case folding for Latin, Latin-1, Latin Extended-A, Greek, and Cyrillic.
char32_t to_lower(char32_t cp) noexcept;
std::string to_lower(std::string_view utf8);

/// Unicode "word" characters: letters and digits of the common scripts plus underscore.
bool is_word_char(char32_t cp) noexcept;

bool is_space(char32_t cp) noexcept;

/// Lowercase, collapse whitespace runs to one ASCII space, and trim.
std::string normalize(std::string_view utf8);

/// Split normalized text on spaces.
std::vector<std::string> split_words(std::string_view utf8);

}  // namespace inflacast::text
