#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Unicode helpers. All "characters" here are Unicode scalar values; strings
// crossing module boundaries are UTF-8.
namespace medharness::text {

/// Decodes UTF-8. Ill-formed sequences become U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view scalars);

bool is_valid_utf8(std::string_view s) noexcept;

std::string nfc(std::string_view utf8);

/// Simple (1:1) case folding, so offsets in the folded string line up with
/// the input.
std::u32string casefold(std::u32string_view s);

/// Han ideographs, kana, hangul, and CJK/fullwidth punctuation. Fullwidth
/// letters and digits are not included.
bool is_cjk(char32_t c) noexcept;
bool is_space(char32_t c) noexcept;
bool is_line_break(char32_t c) noexcept;
/// Unicode punctuation (general category P*).
bool is_punct(char32_t c) noexcept;

/// Letters and digits outside the CJK ranges: the characters that glue an
/// option letter into a longer word.
bool is_word_char(char32_t c) noexcept;

/// Maps 'A'..'Z', 'a'..'z' and their fullwidth forms to an uppercase ASCII
/// letter; returns 0 for anything else.
char latin_letter(char32_t c) noexcept;

std::u32string trim(std::u32string_view s);
std::string trim(std::string_view s);

std::size_t scalar_count(std::string_view utf8);

/// Replaces every line-break sequence ("\r\n" counts once) with one space.
std::string single_line(std::string_view utf8);

/// Splits on line breaks ("\r\n" counts once). Keeps empty lines.
std::vector<std::u32string> split_lines(std::u32string_view s);

}  // namespace medharness::text
