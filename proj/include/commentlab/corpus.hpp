#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "error.hpp"
#include "io.hpp"
#include "text.hpp"
#include "timeutil.hpp"

namespace commentlab {

struct Comment {
    std::string id;
    std::string video_id;
    std::string user_id;
    Timestamp timestamp{};
    std::int64_t like_count = 0;
    std::string text;
};

struct TokenizedComment {
    std::string comment_id;
    Tokens tokens;
};

struct VideoRecord {
    std::string video_id;
    std::size_t comment_count = 0;
    bool relevant = false;
};

struct QuerySet {
    std::vector<std::string> seed;
    std::vector<std::string> related;
    std::vector<std::string> news_channels;
    std::vector<std::string> final;
};

struct TimeWindow {
    Timestamp begin;
    Timestamp end; // exclusive
};

// ---------------------------------------------------------------------------
// Comment and video files

inline Comment comment_from_json(const json& j) {
    Comment c;
    c.id = j.at("id").get<std::string>();
    c.video_id = j.at("video_id").get<std::string>();
    c.user_id = j.at("user_id").get<std::string>();
    c.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
    c.like_count = j.at("like_count").get<std::int64_t>();
    c.text = j.at("text").get<std::string>();
    require(c.like_count >= 0, "negative like_count for comment " + c.id);
    return c;
}

inline json comment_to_json(const Comment& c) {
    return json{{"id", c.id},
                {"video_id", c.video_id},
                {"user_id", c.user_id},
                {"timestamp", format_timestamp(c.timestamp)},
                {"like_count", c.like_count},
                {"text", c.text}};
}

/// Loads a comments file. Ids must be unique; when `window` is given, comments
/// outside it are dropped.
inline std::vector<Comment> load_comments(const std::string& path, std::optional<TimeWindow> window = {}) {
    std::vector<Comment> comments;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](const json& j, std::size_t lineno) {
        Comment c;
        try {
            c = comment_from_json(j);
        } catch (const Error& e) {
            throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!seen.insert(c.id).second) {
            throw Error(path + ":" + std::to_string(lineno) + ": duplicate comment id " + c.id);
        }
        if (window && (c.timestamp < window->begin || c.timestamp >= window->end)) return;
        comments.push_back(std::move(c));
    });
    return comments;
}

inline void save_comments(const std::string& path, const std::vector<Comment>& comments) {
    auto out = open_output(path);
    for (const auto& c : comments) out << comment_to_json(c).dump() << '\n';
}

inline std::vector<VideoRecord> load_videos(const std::string& path) {
    std::vector<VideoRecord> videos;
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        VideoRecord v;
        v.video_id = j.at("video_id").get<std::string>();
        v.relevant = j.at("relevant").get<bool>();
        if (j.contains("comment_count")) v.comment_count = j.at("comment_count").get<std::size_t>();
        videos.push_back(std::move(v));
    });
    return videos;
}

inline void save_videos(const std::string& path, const std::vector<VideoRecord>& videos) {
    auto out = open_output(path);
    for (const auto& v : videos) {
        out << json{{"video_id", v.video_id}, {"relevant", v.relevant}, {"comment_count", v.comment_count}}.dump()
            << '\n';
    }
}

/// Sets each video's comment_count to the number of comments referencing it.
inline void count_video_comments(std::vector<VideoRecord>& videos, const std::vector<Comment>& comments) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& c : comments) ++counts[c.video_id];
    for (auto& v : videos) {
        auto it = counts.find(v.video_id);
        v.comment_count = it == counts.end() ? 0 : it->second;
    }
}

inline std::vector<TokenizedComment> tokenize_all(const std::vector<Comment>& comments) {
    std::vector<TokenizedComment> out;
    out.reserve(comments.size());
    for (const auto& c : comments) out.push_back({c.id, tokenize(c.text)});
    return out;
}

inline void save_tokenized(const std::string& path, const std::vector<TokenizedComment>& docs) {
    auto out = open_output(path);
    for (const auto& d : docs) out << json{{"comment_id", d.comment_id}, {"tokens", d.tokens}}.dump() << '\n';
}

inline std::vector<TokenizedComment> load_tokenized(const std::string& path) {
    std::vector<TokenizedComment> docs;
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        docs.push_back({j.at("comment_id").get<std::string>(), j.at("tokens").get<Tokens>()});
    });
    return docs;
}

// ---------------------------------------------------------------------------
// Query set expansion

inline QuerySet build_query_set(std::vector<std::string> seed, std::vector<std::string> related,
                                std::vector<std::string> news) {
    if (related.empty() || news.empty()) throw Error("empty expansion input");
    QuerySet qs;
    std::unordered_set<std::string> seen;
    auto add = [&](std::string q) {
        if (seen.insert(q).second) qs.final.push_back(std::move(q));
    };
    for (const auto& q : related) add(q);
    for (const auto& q : related) {
        for (const auto& n : news) add(q + " " + n);
    }
    qs.seed = std::move(seed);
    qs.related = std::move(related);
    qs.news_channels = std::move(news);
    return qs;
}

// ---------------------------------------------------------------------------
// Video popularity filter

inline constexpr std::size_t kDefaultMinComments = 11;

inline std::vector<VideoRecord> filter_popular(const std::vector<VideoRecord>& videos,
                                               std::size_t min_comments = kDefaultMinComments) {
    std::vector<VideoRecord> kept;
    std::copy_if(videos.begin(), videos.end(), std::back_inserter(kept),
                 [&](const VideoRecord& v) { return v.relevant && v.comment_count >= min_comments; });
    return kept;
}

// ---------------------------------------------------------------------------
// Nationality attribution

/// Lowercase alias (possibly multi-token) to canonical country name.
class Gazetteer {
public:
    void add(std::string_view alias, std::string canonical) {
        Tokens key = tokenize(alias);
        if (key.empty()) return;
        max_len_ = std::max(max_len_, key.size());
        aliases_[std::move(key)] = std::move(canonical);
    }

    static Gazetteer load(const std::string& path) {
        Gazetteer g;
        for (const auto& row : read_tsv(path)) {
            if (row.size() < 2) throw Error(path + ": expected 'alias<TAB>canonical' rows");
            g.add(row[0], row[1]);
        }
        return g;
    }

    // Longest alias starting at `pos` that ends before `limit`.
    std::optional<std::pair<std::string, std::size_t>> match(const Tokens& tokens, std::size_t pos,
                                                             std::size_t limit) const {
        const std::size_t longest = std::min(max_len_, limit - pos);
        for (std::size_t len = longest; len >= 1; --len) {
            Tokens key(tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                       tokens.begin() + static_cast<std::ptrdiff_t>(pos + len));
            auto it = aliases_.find(key);
            if (it != aliases_.end()) return std::make_pair(it->second, len);
        }
        return std::nullopt;
    }

    std::size_t size() const { return aliases_.size(); }

private:
    std::map<Tokens, std::string> aliases_;
    std::size_t max_len_ = 0;
};

inline std::vector<std::string> default_nationality_templates() {
    return {"i'm", "i am", "i am from", "i am a", "i am an", "i am in", "i am in the", "i am from the", "love from"};
}

struct CountryStats {
    std::set<std::string> users;
    std::size_t mentions = 0;
};

struct CountryAttribution {
    std::map<std::string, CountryStats> countries;
    std::map<std::string, std::string> user_country;
};

inline constexpr std::size_t kTemplateWindow = 5;

/// Scans the five tokens after every template occurrence (longest template per
/// start position). The first gazetteer hit in a window is one mention. With
/// single attribution, a user is assigned the modal country of their mentions
/// and ties leave the user unattributed; with multi attribution a user joins
/// every country they mentioned.
inline CountryAttribution extract_country_mentions(const std::vector<Comment>& comments,
                                                   const std::vector<std::string>& templates,
                                                   const Gazetteer& gazetteer, bool multi_attribution = false) {
    std::map<Tokens, bool> template_set;
    std::size_t max_template = 0;
    for (const auto& t : templates) {
        Tokens tok = tokenize(t);
        if (tok.empty()) continue;
        max_template = std::max(max_template, tok.size());
        template_set[std::move(tok)] = true;
    }

    CountryAttribution result;
    std::map<std::string, std::map<std::string, std::size_t>> per_user;
    for (const auto& c : comments) {
        const Tokens tokens = tokenize(c.text);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            std::size_t tlen = 0;
            for (std::size_t len = std::min(max_template, tokens.size() - i); len >= 1; --len) {
                Tokens key(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                           tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
                if (template_set.count(key)) {
                    tlen = len;
                    break;
                }
            }
            if (tlen == 0) continue;
            const std::size_t begin = i + tlen;
            const std::size_t end = std::min(tokens.size(), begin + kTemplateWindow);
            for (std::size_t j = begin; j < end; ++j) {
                if (auto hit = gazetteer.match(tokens, j, end)) {
                    ++result.countries[hit->first].mentions;
                    ++per_user[c.user_id][hit->first];
                    break;
                }
            }
        }
    }

    for (const auto& [user, counts] : per_user) {
        if (multi_attribution) {
            for (const auto& [country, n] : counts) result.countries[country].users.insert(user);
            continue;
        }
        std::size_t best = 0;
        std::string best_country;
        bool tie = false;
        for (const auto& [country, n] : counts) {
            if (n > best) {
                best = n;
                best_country = country;
                tie = false;
            } else if (n == best) {
                tie = true;
            }
        }
        if (tie) continue;
        result.countries[best_country].users.insert(user);
        result.user_country[user] = best_country;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Collective intent trigrams

struct TrigramCount {
    std::string trigram;
    std::size_t frequency = 0;
    std::size_t global_rank = 0; // 1-based over all unique trigrams
};

inline std::vector<std::string> default_volitional_verbs() { return {"want", "need", "wish", "demand", "seek"}; }

inline std::unordered_map<std::string, std::size_t> count_trigrams(const std::vector<TokenizedComment>& corpus) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& doc : corpus) {
        const auto& t = doc.tokens;
        for (std::size_t i = 0; i + 2 < t.size(); ++i) ++counts[t[i] + ' ' + t[i + 1] + ' ' + t[i + 2]];
    }
    return counts;
}

/// Trigrams of the form "we <volitional verb> x", in global frequency rank order.
/// Ranks order all unique trigrams by descending frequency, ties lexicographic.
inline std::vector<TrigramCount> collective_intent_trigrams(const std::vector<TokenizedComment>& corpus,
                                                            const std::vector<std::string>& volitional_verbs) {
    const auto counts = count_trigrams(corpus);
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    const std::unordered_set<std::string> verbs(volitional_verbs.begin(), volitional_verbs.end());
    std::vector<TrigramCount> out;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const auto& tri = ranked[r].first;
        const auto s1 = tri.find(' ');
        const auto s2 = tri.find(' ', s1 + 1);
        if (tri.compare(0, s1, "we") != 0) continue;
        if (!verbs.count(tri.substr(s1 + 1, s2 - s1 - 1))) continue;
        out.push_back({tri, ranked[r].second, r + 1});
    }
    return out;
}

} // namespace commentlab
