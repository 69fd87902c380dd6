#include <gtest/gtest.h>

#include <numeric>

#include <commentlab/random.hpp>
#include <commentlab/text.hpp>
#include <commentlab/timeutil.hpp>

using namespace commentlab;

TEST(Tokenize, LowercasesAndStripsPunctuation) {
    EXPECT_EQ(tokenize("We want PEACE!"), (Tokens{"we", "want", "peace"}));
    EXPECT_EQ(tokenize("  hello,   world... "), (Tokens{"hello", "world"}));
}

TEST(Tokenize, ContractionsCollapse) {
    EXPECT_EQ(tokenize("I'm from India"), (Tokens{"im", "from", "india"}));
    EXPECT_EQ(tokenize("we don't want war"), (Tokens{"we", "dont", "want", "war"}));
}

TEST(Tokenize, EmojiOnlyIsEmpty) {
    EXPECT_TRUE(tokenize("\U0001F1EE\U0001F1F3 \U0001F64F\U0001F3FD ❤️").empty());
    EXPECT_TRUE(tokenize("\U0001F468‍\U0001F469‍\U0001F467").empty());
}

TEST(Tokenize, EmojiInsideWordSplitsNothing) {
    EXPECT_EQ(tokenize("peace\U0001F54A️now"), (Tokens{"peacenow"}));
}

TEST(Tokenize, NonLatinScriptsKeepCase) {
    EXPECT_EQ(tokenize("हम शांति चाहते हैं।"), (Tokens{"हम", "शांति", "चाहते", "हैं"}));
    // Cyrillic and Greek are left as written; only Latin letters fold.
    EXPECT_EQ(tokenize("Мир ΕΙΡΗΝΗ Peace"), (Tokens{"Мир", "ΕΙΡΗΝΗ", "peace"}));
}

TEST(Tokenize, CombiningMarksSurvive) {
    // Devanagari vowel signs are Mn/Mc, not punctuation.
    const auto t = tokenize("शांति");
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0], "शांति");
}

TEST(Tokenize, UnicodeWhitespaceSeparates) {
    EXPECT_EQ(tokenize("a b　c\td\ne"), (Tokens{"a", "b", "c", "d", "e"}));
}

TEST(Tokenize, InvalidUtf8IsDropped) {
    const std::string s = std::string("ab") + char(0xFF) + "c d";
    EXPECT_EQ(tokenize(s), (Tokens{"abc", "d"}));
}

TEST(Tokenize, SymbolsAndDigits) {
    EXPECT_EQ(tokenize("#peace @india 100% $5 +1"), (Tokens{"peace", "india", "100", "5", "1"}));
}

TEST(Tokenize, PropertyIdempotentOnJoinedOutput) {
    Rng rng(7);
    const std::vector<std::string> pieces{"We", "want", "PEACE", "!", " ", "\U0001F600", "शांति", "...", "Ça", " ",
                                          "don't", "мир", "‍", "42", "\t"};
    for (int trial = 0; trial < 500; ++trial) {
        std::string s;
        for (int i = 0, n = static_cast<int>(rng.between(0, 12)); i < n; ++i) s += pieces[rng.index(pieces.size())];
        const auto once = tokenize(s);
        EXPECT_EQ(tokenize(join(once)), once) << s;
        for (const auto& t : once) EXPECT_FALSE(t.empty());
    }
}

TEST(Utf8, CharsSplitsCodePoints) {
    const auto c = utf8_chars("aé€😀");
    ASSERT_EQ(c.size(), 4u);
    EXPECT_EQ(c[1], "é");
    EXPECT_EQ(c[3], "😀");
}

TEST(Time, ParsesIsoVariants) {
    using namespace std::chrono;
    const auto z = parse_timestamp("2019-02-14T10:30:00Z");
    EXPECT_EQ(parse_timestamp("2019-02-14T16:00:00+05:30"), z);
    EXPECT_EQ(parse_timestamp("2019-02-14T10:30:00.250Z"), z);
    EXPECT_EQ(format_day(utc_day(z)), "2019-02-14");
    EXPECT_EQ(parse_timestamp("2019-02-14"), sys_seconds{sys_days{year{2019} / 2 / 14}});
    EXPECT_EQ(format_day(utc_day(parse_timestamp("2019-02-15T02:00:00+05:30"))), "2019-02-14");
}

TEST(Time, RejectsGarbage) {
    EXPECT_THROW(parse_timestamp("yesterday"), Error);
    EXPECT_THROW(parse_timestamp("2019-13-01T00:00:00Z"), Error);
}

TEST(Rng, DeterministicAndInRange) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.index(17);
        EXPECT_EQ(x, b.index(17));
        EXPECT_LT(x, 17u);
        const double u = a.uniform();
        b.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Rng, ShuffleIsPermutation) {
    Rng rng(3);
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    rng.shuffle(w);
    EXPECT_NE(v, w);
    std::sort(w.begin(), w.end());
    EXPECT_EQ(v, w);
}
