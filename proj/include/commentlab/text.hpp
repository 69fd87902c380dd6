#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

namespace commentlab {

using Tokens = std::vector<std::string>;

namespace detail {

inline bool is_punct_or_symbol(UChar32 c) {
    switch (u_charType(c)) {
    case U_CONNECTOR_PUNCTUATION:
    case U_DASH_PUNCTUATION:
    case U_START_PUNCTUATION:
    case U_END_PUNCTUATION:
    case U_INITIAL_PUNCTUATION:
    case U_FINAL_PUNCTUATION:
    case U_OTHER_PUNCTUATION:
    case U_MATH_SYMBOL:
    case U_CURRENCY_SYMBOL:
    case U_MODIFIER_SYMBOL:
    case U_OTHER_SYMBOL:
        return true;
    default:
        return false;
    }
}

inline bool is_emoji(UChar32 c) {
    // Extended_Pictographic covers emoji that are not in the S* categories
    // (e.g. some reserved pictographic ranges); digits and '#' are excluded
    // because they are only emoji components.
    return u_hasBinaryProperty(c, UCHAR_EXTENDED_PICTOGRAPHIC) ||
           u_hasBinaryProperty(c, UCHAR_EMOJI_MODIFIER) ||
           u_hasBinaryProperty(c, UCHAR_REGIONAL_INDICATOR);
}

// Joiners, variation selectors, keycap and tag characters that only glue an
// emoji sequence together. They are dropped when they trail a stripped
// character so that ZWJ/ZWNJ inside Indic or Arabic-script words survive.
inline bool is_emoji_glue(UChar32 c) {
    return c == 0x200D || c == 0xFE0E || c == 0xFE0F || c == 0x20E3 ||
           (c >= 0xE0020 && c <= 0xE007F);
}

inline bool is_latin(UChar32 c) {
    UErrorCode status = U_ZERO_ERROR;
    return uscript_getScript(c, &status) == USCRIPT_LATIN && U_SUCCESS(status);
}

inline void append_utf8(std::string& out, UChar32 c) {
    char buf[U8_MAX_LENGTH];
    std::int32_t len = 0;
    UBool error = false;
    U8_APPEND(buf, len, U8_MAX_LENGTH, c, error);
    if (!error) out.append(buf, static_cast<std::size_t>(len));
}

} // namespace detail

/// Splits on Unicode whitespace after removing punctuation, symbols and emoji.
/// Latin-script letters are lowercased; every other script is kept verbatim.
/// Invalid UTF-8 bytes are dropped.
inline Tokens tokenize(std::string_view text) {
    Tokens tokens;
    std::string current;
    bool after_stripped = false;

    const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
    const auto length = static_cast<std::int32_t>(text.size());
    std::int32_t i = 0;
    while (i < length) {
        UChar32 c;
        U8_NEXT(bytes, i, length, c);
        if (c < 0) continue;

        if (u_isUWhiteSpace(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
            after_stripped = false;
            continue;
        }
        if (detail::is_punct_or_symbol(c) || detail::is_emoji(c) ||
            u_charType(c) == U_CONTROL_CHAR || (after_stripped && detail::is_emoji_glue(c))) {
            after_stripped = true;
            continue;
        }
        after_stripped = false;
        if (detail::is_latin(c)) c = u_tolower(c);
        detail::append_utf8(current, c);
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

inline std::string join(const Tokens& tokens, std::string_view sep = " ") {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.append(sep);
        out.append(tokens[i]);
    }
    return out;
}

// Code points of a UTF-8 string, each kept as its own UTF-8 substring.
inline std::vector<std::string_view> utf8_chars(std::string_view s) {
    std::vector<std::string_view> chars;
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(s.data());
    const auto length = static_cast<std::int32_t>(s.size());
    std::int32_t i = 0;
    while (i < length) {
        const std::int32_t start = i;
        U8_FWD_1(bytes, i, length);
        chars.push_back(s.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
    }
    return chars;
}

} // namespace commentlab
