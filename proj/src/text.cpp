#include "medharness/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "medharness/error.hpp"

namespace medharness::text {

std::u32string decode(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
  }
  return out;
}

std::string encode(std::u32string_view scalars) {
  std::string out;
  out.reserve(scalars.size());
  for (char32_t c : scalars) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

bool is_valid_utf8(std::string_view s) noexcept {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const auto length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(p, i, length, c);
    if (c < 0) return false;
  }
  return true;
}

std::string nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    fail(ErrorCode::IoError, "ICU NFC normalizer unavailable");
  }
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  if (normalizer->isNormalized(source, status) && U_SUCCESS(status)) {
    std::string out;
    source.toUTF8String(out);
    return out;
  }
  status = U_ZERO_ERROR;
  icu::UnicodeString normalized = normalizer->normalize(source, status);
  if (U_FAILURE(status)) {
    fail(ErrorCode::IoError, "NFC normalization failed");
  }
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::u32string casefold(std::u32string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    out.push_back(static_cast<char32_t>(
        u_foldCase(static_cast<UChar32>(c), U_FOLD_CASE_DEFAULT)));
  }
  return out;
}

bool is_cjk(char32_t c) noexcept {
  if (c >= 0x4E00 && c <= 0x9FFF) return true;    // unified ideographs
  if (c >= 0x3400 && c <= 0x4DBF) return true;    // extension A
  if (c >= 0x20000 && c <= 0x323AF) return true;  // extensions B-H
  if (c >= 0xF900 && c <= 0xFAFF) return true;    // compatibility ideographs
  if (c >= 0x3001 && c <= 0x303F) return true;    // CJK symbols/punctuation
  if (c >= 0x3040 && c <= 0x30FF) return true;    // kana
  if (c >= 0xAC00 && c <= 0xD7AF) return true;    // hangul syllables
  if (c >= 0xFF01 && c <= 0xFF60) {
    // fullwidth forms, minus fullwidth letters and digits
    return !((c >= 0xFF10 && c <= 0xFF19) || (c >= 0xFF21 && c <= 0xFF3A) ||
             (c >= 0xFF41 && c <= 0xFF5A));
  }
  if (c >= 0xFE30 && c <= 0xFE4F) return true;  // compatibility forms
  return false;
}

bool is_space(char32_t c) noexcept {
  return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0;
}

bool is_line_break(char32_t c) noexcept {
  return c == U'\n' || c == U'\r' || c == 0x0B || c == 0x0C || c == 0x85 ||
         c == 0x2028 || c == 0x2029;
}

bool is_punct(char32_t c) noexcept {
  return u_ispunct(static_cast<UChar32>(c)) != 0;
}

bool is_word_char(char32_t c) noexcept {
  return u_isalnum(static_cast<UChar32>(c)) != 0 && !is_cjk(c);
}

char latin_letter(char32_t c) noexcept {
  if (c >= U'A' && c <= U'Z') return static_cast<char>(c);
  if (c >= U'a' && c <= U'z') return static_cast<char>(c - U'a' + U'A');
  if (c >= 0xFF21 && c <= 0xFF3A) return static_cast<char>('A' + (c - 0xFF21));
  if (c >= 0xFF41 && c <= 0xFF5A) return static_cast<char>('A' + (c - 0xFF41));
  return 0;
}

std::u32string trim(std::u32string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && is_space(s[begin])) ++begin;
  while (end > begin && is_space(s[end - 1])) --end;
  return std::u32string(s.substr(begin, end - begin));
}

std::string trim(std::string_view s) { return encode(trim(decode(s))); }

std::size_t scalar_count(std::string_view utf8) {
  std::size_t n = 0;
  for (unsigned char c : utf8) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string single_line(std::string_view utf8) {
  std::u32string s = decode(utf8);
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_line_break(s[i])) {
      if (s[i] == U'\r' && i + 1 < s.size() && s[i + 1] == U'\n') ++i;
      out.push_back(U' ');
    } else {
      out.push_back(s[i]);
    }
  }
  return encode(out);
}

std::vector<std::u32string> split_lines(std::u32string_view s) {
  std::vector<std::u32string> lines;
  std::u32string current;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_line_break(s[i])) {
      if (s[i] == U'\r' && i + 1 < s.size() && s[i + 1] == U'\n') ++i;
      lines.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(s[i]);
    }
  }
  lines.push_back(std::move(current));
  return lines;
}

}  // namespace medharness::text
