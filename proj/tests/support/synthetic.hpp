#pragma once

// Synthetic corpora with known ground truth, shared by unit and acceptance tests.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <commentlab/hope.hpp>
#include <commentlab/random.hpp>
#include <commentlab/text.hpp>

namespace commentlab::testing {

inline std::string utf8(char32_t c) {
    std::string s;
    detail::append_utf8(s, static_cast<UChar32>(c));
    return s;
}

struct Script {
    std::string name;
    std::vector<std::string> consonants;
    std::vector<std::string> vowels;
};

inline Script latin_script() {
    return {"latin", {"k", "t", "r", "m", "n", "s", "p", "l", "d", "g"}, {"a", "e", "i", "o", "u"}};
}

inline Script devanagari_script() {
    Script s{"devanagari", {}, {""}};
    for (char32_t c : {U'क', U'ग', U'त', U'द', U'न', U'प', U'म', U'र', U'ल', U'स'}) s.consonants.push_back(utf8(c));
    for (char32_t c : {U'ा', U'ि', U'ी', U'ु', U'े'}) s.vowels.push_back(utf8(c));
    return s;
}

inline Script cyrillic_script() {
    Script s{"cyrillic", {}, {}};
    for (char32_t c : {U'б', U'в', U'г', U'д', U'ж', U'з', U'к', U'л', U'м', U'н'}) s.consonants.push_back(utf8(c));
    for (char32_t c : {U'а', U'е', U'и', U'о', U'у'}) s.vowels.push_back(utf8(c));
    return s;
}

inline std::vector<std::string> make_vocabulary(const Script& script, std::size_t size, Rng& rng) {
    std::vector<std::string> words;
    std::set<std::string> seen;
    while (words.size() < size) {
        const auto syllables = rng.between(2, 3);
        std::string w;
        for (int i = 0; i < syllables; ++i) {
            w += script.consonants[rng.index(script.consonants.size())];
            w += script.vowels[rng.index(script.vowels.size())];
        }
        if (seen.insert(w).second) words.push_back(w);
    }
    return words;
}

// Zipf-like draw: rank r has weight 1 / (r + 2).
inline std::size_t zipf_index(std::size_t n, Rng& rng) {
    static thread_local std::vector<double> cdf;
    static thread_local std::size_t cached = 0;
    if (cached != n) {
        cdf.assign(n, 0.0);
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) cdf[r] = acc += 1.0 / static_cast<double>(r + 2);
        for (double& x : cdf) x /= acc;
        cached = n;
    }
    const double u = rng.uniform();
    return std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin()));
}

struct SyntheticDoc {
    std::string id;
    std::string language;
    std::string text;
};

/// Three languages with disjoint inventories in three scripts.
struct LanguageCorpus {
    std::vector<std::string> languages;
    std::vector<std::vector<std::string>> vocab;

    LanguageCorpus(std::uint64_t seed, std::size_t vocab_size = 300) {
        Rng rng(seed);
        const std::vector<Script> scripts{latin_script(), devanagari_script(), cyrillic_script()};
        for (const auto& s : scripts) {
            languages.push_back(s.name);
            vocab.push_back(make_vocabulary(s, vocab_size, rng));
        }
    }

    std::vector<SyntheticDoc> generate(std::size_t per_language, std::uint64_t seed, const std::string& prefix) const {
        Rng rng(seed);
        std::vector<SyntheticDoc> docs;
        for (std::size_t i = 0; i < per_language * languages.size(); ++i) {
            const std::size_t lang = i % languages.size();
            const auto len = rng.between(5, 14);
            std::string text;
            for (int t = 0; t < len; ++t) {
                if (t) text += ' ';
                text += vocab[lang][zipf_index(vocab[lang].size(), rng)];
            }
            docs.push_back({prefix + std::to_string(i), languages[lang], text});
        }
        return docs;
    }
};

/// Two sub-languages over the same alphabet whose tokens never co-occur.
struct TwoSetCorpus {
    std::vector<std::string> set_a, set_b;
    std::vector<Tokens> docs;

    TwoSetCorpus(std::size_t words_per_set, std::size_t docs_per_set, std::uint64_t seed) {
        Rng rng(seed);
        const auto script = latin_script();
        auto words = make_vocabulary(script, 2 * words_per_set, rng);
        set_a.assign(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(words_per_set));
        set_b.assign(words.begin() + static_cast<std::ptrdiff_t>(words_per_set), words.end());
        for (std::size_t i = 0; i < 2 * docs_per_set; ++i) {
            const auto& src = i % 2 ? set_b : set_a;
            Tokens doc;
            const auto len = rng.between(6, 12);
            for (int t = 0; t < len; ++t) doc.push_back(src[rng.index(src.size())]);
            docs.push_back(std::move(doc));
        }
    }
};

inline std::vector<std::string> word_pool(const std::string& stem, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(stem + std::to_string(i));
    return out;
}

/// Hope-speech examples where class-specific words always appear: perfectly
/// separable by unigram features.
inline std::vector<LabeledExample> separable_hope_set(std::size_t per_class, std::uint64_t seed) {
    Rng rng(seed);
    const auto hope_words = word_pool("amity", 25);
    const auto war_words = word_pool("strike", 25);
    const auto filler = word_pool("the", 60);
    std::vector<LabeledExample> out;
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const bool pos = i % 2 == 0;
        const auto& cls = pos ? hope_words : war_words;
        Tokens t;
        for (int k = 0, n = static_cast<int>(rng.between(2, 4)); k < n; ++k) t.push_back(cls[rng.index(cls.size())]);
        for (int k = 0, n = static_cast<int>(rng.between(3, 8)); k < n; ++k) t.push_back(filler[rng.index(filler.size())]);
        rng.shuffle(t);
        LabeledExample e;
        e.comment_id = "s" + std::to_string(i);
        e.text = join(t);
        e.tokens = t;
        e.label = pos ? HopeLabel::hope : HopeLabel::not_hope;
        e.week_bucket = static_cast<int>(i % 4) + 1;
        out.push_back(std::move(e));
    }
    return out;
}

/// Noisy set in which the class signal is carried mostly by many rare
/// two-token phrases. The returned lexicon lists those phrases with their
/// polarity, so the intent score summarises what n-grams only see sparsely.
struct NoisyHopeSet {
    std::vector<LabeledExample> examples;
    std::vector<std::pair<std::string, int>> phrases; // phrase, polarity
};

inline NoisyHopeSet noisy_hope_set(std::size_t per_class, std::uint64_t seed, double label_noise = 0.1) {
    Rng rng(seed);
    NoisyHopeSet set;
    const std::size_t n_phrases = per_class; // roughly one use per phrase
    for (std::size_t i = 0; i < n_phrases; ++i) {
        set.phrases.emplace_back("calm" + std::to_string(i) + " accord" + std::to_string(i), +1);
        set.phrases.emplace_back("fury" + std::to_string(i) + " raid" + std::to_string(i), -1);
    }
    const auto filler = word_pool("w", 80);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const bool pos = i % 2 == 0;
        Tokens t;
        for (int k = 0, n = static_cast<int>(rng.between(4, 10)); k < n; ++k) t.push_back(filler[rng.index(filler.size())]);
        if (rng.uniform() < 0.8) {
            const std::size_t p = 2 * rng.index(n_phrases) + (pos ? 0 : 1);
            const auto phrase = tokenize(set.phrases[p].first);
            const auto at = rng.index(t.size() + 1);
            t.insert(t.begin() + static_cast<std::ptrdiff_t>(at), phrase.begin(), phrase.end());
        }
        const bool flipped = rng.uniform() < label_noise;
        LabeledExample e;
        e.comment_id = "n" + std::to_string(i);
        e.text = join(t);
        e.tokens = t;
        e.label = (pos != flipped) ? HopeLabel::hope : HopeLabel::not_hope;
        e.week_bucket = static_cast<int>(i % 4) + 1;
        set.examples.push_back(std::move(e));
    }
    return set;
}

} // namespace commentlab::testing
