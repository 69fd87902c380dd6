#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "io.hpp"
#include "text.hpp"
#include "timeutil.hpp"

namespace commentlab {

enum class Polarity : int { war = -1, neutral = 0, peace = 1 };

inline Polarity parse_polarity(const std::string& s) {
    if (s == "peace" || s == "+1" || s == "1") return Polarity::peace;
    if (s == "war" || s == "-1") return Polarity::war;
    if (s == "neutral" || s == "0") return Polarity::neutral;
    throw Error("unknown polarity '" + s + "' (expected peace|war|neutral)");
}

inline std::string to_string(Polarity p) {
    switch (p) {
    case Polarity::peace: return "peace";
    case Polarity::war: return "war";
    default: return "neutral";
    }
}

/// Polarity-annotated phrases stored as a token trie.
class PhraseLexicon {
public:
    /// Adds a tokenised phrase. Re-adding a phrase with the same polarity is a
    /// no-op; a conflicting polarity is an error.
    void add(const Tokens& phrase, Polarity polarity) {
        require(!phrase.empty(), "lexicon phrase is empty after tokenization");
        Node* node = &root_;
        for (const auto& t : phrase) {
            auto& child = node->children[t];
            if (!child) child = std::make_unique<Node>();
            node = child.get();
        }
        if (node->polarity) {
            if (*node->polarity != polarity) throw Error("conflicting polarity for phrase '" + join(phrase) + "'");
            return;
        }
        node->polarity = polarity;
        max_len_ = std::max(max_len_, phrase.size());
        ++size_;
        entries_.emplace_back(phrase, polarity);
    }

    void add(std::string_view phrase, Polarity polarity) { add(tokenize(phrase), polarity); }

    /// Loads "phrase<TAB>peace|war|neutral" rows.
    static PhraseLexicon load(const std::string& path) {
        PhraseLexicon lex;
        for (const auto& row : read_tsv(path)) {
            if (row.size() < 2) throw Error(path + ": expected 'phrase<TAB>polarity' rows");
            try {
                lex.add(row[0], parse_polarity(row[1]));
            } catch (const Error& e) {
                throw Error(path + ": " + e.what());
            }
        }
        return lex;
    }

    /// Longest phrase starting at `pos`: (length, polarity), or nullopt.
    std::optional<std::pair<std::size_t, Polarity>> longest_at(const Tokens& tokens, std::size_t pos) const {
        const Node* node = &root_;
        std::optional<std::pair<std::size_t, Polarity>> best;
        for (std::size_t i = pos; i < tokens.size(); ++i) {
            auto it = node->children.find(tokens[i]);
            if (it == node->children.end()) break;
            node = it->second.get();
            if (node->polarity) best = std::make_pair(i - pos + 1, *node->polarity);
        }
        return best;
    }

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    std::size_t max_len() const { return max_len_; }
    const std::vector<std::pair<Tokens, Polarity>>& entries() const { return entries_; }

private:
    struct Node {
        std::unordered_map<std::string, std::unique_ptr<Node>> children;
        std::optional<Polarity> polarity;
    };
    Node root_;
    std::size_t max_len_ = 0;
    std::size_t size_ = 0;
    std::vector<std::pair<Tokens, Polarity>> entries_;
};

enum class IntentClass { war, neutral, peace };

inline std::string to_string(IntentClass c) {
    switch (c) {
    case IntentClass::peace: return "peace";
    case IntentClass::war: return "war";
    default: return "neutral";
    }
}

struct MatchedSpan {
    std::size_t start = 0;
    std::size_t end = 0; // exclusive
    std::string phrase;
    Polarity polarity = Polarity::neutral;
};

struct IntentScore {
    std::string comment_id;
    int peace_hits = 0;
    int war_hits = 0;
    int score = 0;
    IntentClass intent = IntentClass::neutral;
    std::vector<MatchedSpan> matched_spans;

    bool has_polar_match() const { return peace_hits > 0 || war_hits > 0; }
};

/// Greedy leftmost-longest scan: the longest phrase starting at each position
/// is matched and its tokens consumed, so subsumed phrases never count.
/// Neutral matches consume tokens without changing the score.
inline IntentScore score_comment(const Tokens& tokens, const PhraseLexicon& lexicon, std::string comment_id = {}) {
    IntentScore s;
    s.comment_id = std::move(comment_id);
    std::size_t i = 0;
    while (i < tokens.size()) {
        const auto hit = lexicon.longest_at(tokens, i);
        if (!hit) {
            ++i;
            continue;
        }
        const auto [len, polarity] = *hit;
        Tokens phrase(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                      tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
        s.matched_spans.push_back({i, i + len, join(phrase), polarity});
        if (polarity == Polarity::peace) ++s.peace_hits;
        if (polarity == Polarity::war) ++s.war_hits;
        i += len;
    }
    s.score = s.peace_hits - s.war_hits;
    s.intent = s.score > 0 ? IntentClass::peace : s.score < 0 ? IntentClass::war : IntentClass::neutral;
    return s;
}

inline json to_json(const IntentScore& s) {
    json spans = json::array();
    for (const auto& m : s.matched_spans) {
        spans.push_back({{"start", m.start}, {"end", m.end}, {"phrase", m.phrase}, {"polarity", to_string(m.polarity)}});
    }
    return json{{"comment_id", s.comment_id}, {"peace_hits", s.peace_hits}, {"war_hits", s.war_hits},
                {"score", s.score},           {"class", to_string(s.intent)}, {"matched_spans", spans}};
}

inline IntentScore intent_score_from_json(const json& j) {
    IntentScore s;
    s.comment_id = j.at("comment_id").get<std::string>();
    s.peace_hits = j.at("peace_hits").get<int>();
    s.war_hits = j.at("war_hits").get<int>();
    s.score = s.peace_hits - s.war_hits;
    s.intent = s.score > 0 ? IntentClass::peace : s.score < 0 ? IntentClass::war : IntentClass::neutral;
    for (const auto& m : j.value("matched_spans", json::array())) {
        s.matched_spans.push_back({m.at("start").get<std::size_t>(), m.at("end").get<std::size_t>(),
                                   m.at("phrase").get<std::string>(), parse_polarity(m.at("polarity").get<std::string>())});
    }
    return s;
}

inline void save_intent_scores(const std::string& path, const std::vector<IntentScore>& scores) {
    auto out = open_output(path);
    for (const auto& s : scores) out << to_json(s).dump() << '\n';
}

inline std::vector<IntentScore> load_intent_scores(const std::string& path) {
    std::vector<IntentScore> out;
    for_each_jsonl(path, [&](const json& j, std::size_t lineno) {
        try {
            out.push_back(intent_score_from_json(j));
        } catch (const json::exception& e) {
            throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    });
    return out;
}

inline std::vector<IntentScore> score_comments(const std::vector<Comment>& comments, const PhraseLexicon& lexicon) {
    std::vector<IntentScore> out;
    out.reserve(comments.size());
    for (const auto& c : comments) out.push_back(score_comment(tokenize(c.text), lexicon, c.id));
    return out;
}

// ---------------------------------------------------------------------------
// Daily trends

struct DailyTrend {
    std::chrono::sys_days date{};
    std::size_t total_comments = 0;
    std::int64_t total_likes = 0;
    double peace_comment_share = 0.0;
    double war_comment_share = 0.0;
    double peace_like_share = 0.0;
    double war_like_share = 0.0;
    double coverage = 0.0;
};

namespace detail {

inline std::unordered_map<std::string, const IntentScore*> index_scores(const std::vector<IntentScore>& scores) {
    std::unordered_map<std::string, const IntentScore*> idx;
    for (const auto& s : scores) idx[s.comment_id] = &s;
    return idx;
}

inline double share(double part, double whole) { return whole > 0.0 ? part / whole : 0.0; }

} // namespace detail

/// Per UTC day: class shares by comment count and by like mass, plus the
/// fraction of comments with at least one peace or war phrase. Comments without
/// a score are counted as unmatched.
inline std::vector<DailyTrend> daily_trends(const std::vector<Comment>& comments, const std::vector<IntentScore>& scores) {
    const auto idx = detail::index_scores(scores);
    struct Acc {
        std::size_t n = 0, peace = 0, war = 0, covered = 0;
        std::int64_t likes = 0, peace_likes = 0, war_likes = 0;
    };
    std::map<std::chrono::sys_days, Acc> days;
    for (const auto& c : comments) {
        auto& a = days[utc_day(c.timestamp)];
        ++a.n;
        a.likes += c.like_count;
        auto it = idx.find(c.id);
        if (it == idx.end()) continue;
        const IntentScore& s = *it->second;
        if (s.intent == IntentClass::peace) {
            ++a.peace;
            a.peace_likes += c.like_count;
        } else if (s.intent == IntentClass::war) {
            ++a.war;
            a.war_likes += c.like_count;
        }
        if (s.has_polar_match()) ++a.covered;
    }
    std::vector<DailyTrend> out;
    for (const auto& [day, a] : days) {
        DailyTrend t;
        t.date = day;
        t.total_comments = a.n;
        t.total_likes = a.likes;
        const auto n = static_cast<double>(a.n);
        const auto likes = static_cast<double>(a.likes);
        t.peace_comment_share = detail::share(static_cast<double>(a.peace), n);
        t.war_comment_share = detail::share(static_cast<double>(a.war), n);
        t.peace_like_share = detail::share(static_cast<double>(a.peace_likes), likes);
        t.war_like_share = detail::share(static_cast<double>(a.war_likes), likes);
        t.coverage = detail::share(static_cast<double>(a.covered), n);
        out.push_back(t);
    }
    return out;
}

struct Coverage {
    double comments = 0.0;
    double likes = 0.0;
};

/// Corpus-wide fraction of comments (and of like mass) carrying a peace or war phrase.
inline Coverage overall_coverage(const std::vector<Comment>& comments, const std::vector<IntentScore>& scores) {
    const auto idx = detail::index_scores(scores);
    double covered = 0, covered_likes = 0, likes = 0;
    for (const auto& c : comments) {
        likes += static_cast<double>(c.like_count);
        auto it = idx.find(c.id);
        if (it != idx.end() && it->second->has_polar_match()) {
            covered += 1;
            covered_likes += static_cast<double>(c.like_count);
        }
    }
    return {detail::share(covered, static_cast<double>(comments.size())), detail::share(covered_likes, likes)};
}

inline void write_trends_csv(std::ostream& out, const std::vector<DailyTrend>& trends) {
    out << "date,total_comments,total_likes,peace_comment_share,war_comment_share,peace_like_share,war_like_share,"
           "coverage\n";
    char buf[256];
    for (const auto& t : trends) {
        std::snprintf(buf, sizeof buf, "%s,%zu,%lld,%.6f,%.6f,%.6f,%.6f,%.6f\n", format_day(t.date).c_str(),
                      t.total_comments, static_cast<long long>(t.total_likes), t.peace_comment_share,
                      t.war_comment_share, t.peace_like_share, t.war_like_share, t.coverage);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// User overlap

struct UserOverlap {
    std::set<std::string> peace_users;
    std::set<std::string> war_users;
    std::set<std::string> both;
    double jaccard = 0.0;
};

/// |A ∩ B| / |A ∪ B| from set sizes; 0 when both sets are empty.
inline double jaccard_index(std::size_t size_a, std::size_t size_b, std::size_t size_both) {
    const std::size_t uni = size_a + size_b - size_both;
    return uni == 0 ? 0.0 : static_cast<double>(size_both) / static_cast<double>(uni);
}

inline UserOverlap user_intent_overlap(const std::vector<IntentScore>& scores, const std::vector<Comment>& comments) {
    const auto idx = detail::index_scores(scores);
    UserOverlap o;
    for (const auto& c : comments) {
        auto it = idx.find(c.id);
        if (it == idx.end()) continue;
        if (it->second->intent == IntentClass::peace) o.peace_users.insert(c.user_id);
        if (it->second->intent == IntentClass::war) o.war_users.insert(c.user_id);
    }
    std::set_intersection(o.peace_users.begin(), o.peace_users.end(), o.war_users.begin(), o.war_users.end(),
                          std::inserter(o.both, o.both.begin()));
    o.jaccard = jaccard_index(o.peace_users.size(), o.war_users.size(), o.both.size());
    return o;
}

// ---------------------------------------------------------------------------
// Token usage shift between two windows

inline const std::vector<std::string>& default_english_stopwords() {
    static const std::vector<std::string> words = {
        "a",       "about",   "above",  "after",   "again",   "against", "all",     "am",     "an",     "and",
        "any",     "are",     "as",     "at",      "be",      "because", "been",    "before", "being",  "below",
        "between", "both",    "but",    "by",      "can",     "could",   "did",     "do",     "does",   "doing",
        "dont",    "down",    "during", "each",    "few",     "for",     "from",    "further", "had",    "has",
        "have",    "having",  "he",     "her",     "here",    "hers",    "herself", "him",    "himself", "his",
        "how",     "i",       "if",     "im",      "in",      "into",    "is",      "it",     "its",    "itself",
        "just",    "me",      "more",   "most",    "my",      "myself",  "no",      "nor",    "not",    "now",
        "of",      "off",     "on",     "once",    "only",    "or",      "other",   "our",    "ours",   "ourselves",
        "out",     "over",    "own",    "same",    "she",     "should",  "so",      "some",   "such",   "than",
        "that",    "the",     "their",  "theirs",  "them",    "themselves", "then", "there",  "these",  "they",
        "this",    "those",   "through", "to",     "too",     "under",   "until",   "up",     "very",   "was",
        "we",      "were",    "what",   "when",    "where",   "which",   "while",   "who",    "whom",   "why",
        "will",    "with",    "would",  "you",     "your",    "yours",   "yourself", "yourselves"};
    return words;
}

struct ShiftedToken {
    std::string token;
    double score = 0.0;
};

struct TokenShift {
    std::vector<ShiftedToken> rising_in_a; // ranked by P_a(t) - P_b(t)
    std::vector<ShiftedToken> rising_in_b; // ranked by P_b(t) - P_a(t)
};

inline std::map<std::string, double> unigram_distribution(const std::vector<Tokens>& docs) {
    std::map<std::string, double> p;
    std::size_t total = 0;
    for (const auto& d : docs) {
        for (const auto& t : d) {
            p[t] += 1.0;
            ++total;
        }
    }
    for (auto& [t, v] : p) v /= static_cast<double>(total);
    return p;
}

/// Distributions are relative frequencies over all tokens of each window;
/// stopwords are excluded from the ranked lists only. Ties rank lexicographically.
inline TokenShift token_shift(const std::vector<Tokens>& window_a, const std::vector<Tokens>& window_b, std::size_t top_n,
                              const std::vector<std::string>& stopwords = {}) {
    auto has_tokens = [](const std::vector<Tokens>& w) {
        return std::any_of(w.begin(), w.end(), [](const Tokens& d) { return !d.empty(); });
    };
    if (!has_tokens(window_a) || !has_tokens(window_b)) throw Error("token_shift: empty window");
    const auto pa = unigram_distribution(window_a);
    const auto pb = unigram_distribution(window_b);
    const std::unordered_set<std::string> stop(stopwords.begin(), stopwords.end());

    std::vector<ShiftedToken> diff;
    auto lookup = [](const std::map<std::string, double>& p, const std::string& t) {
        auto it = p.find(t);
        return it == p.end() ? 0.0 : it->second;
    };
    std::set<std::string> vocab;
    for (auto& [t, v] : pa) vocab.insert(t);
    for (auto& [t, v] : pb) vocab.insert(t);
    for (const auto& t : vocab) {
        if (stop.count(t)) continue;
        diff.push_back({t, lookup(pa, t) - lookup(pb, t)});
    }
    auto ranked = [&](bool a_side) {
        std::vector<ShiftedToken> r = diff;
        if (!a_side) {
            for (auto& s : r) s.score = -s.score;
        }
        std::sort(r.begin(), r.end(), [](const ShiftedToken& x, const ShiftedToken& y) {
            return x.score != y.score ? x.score > y.score : x.token < y.token;
        });
        if (r.size() > top_n) r.resize(top_n);
        return r;
    };
    return {ranked(true), ranked(false)};
}

/// Comments whose timestamp falls within `days` UTC days starting at `start`.
inline std::vector<Tokens> window_tokens(const std::vector<Comment>& comments, std::chrono::sys_days start, int days) {
    const Timestamp begin = start;
    const Timestamp end = start + std::chrono::days{days};
    std::vector<Tokens> out;
    for (const auto& c : comments) {
        if (c.timestamp >= begin && c.timestamp < end) out.push_back(tokenize(c.text));
    }
    return out;
}

} // namespace commentlab
