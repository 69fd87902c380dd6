#include <algorithm>
#include <iostream>

#include "cli_support.hpp"

namespace commentlab::cli {

namespace {

std::vector<std::string> read_list(const std::string& path) {
    std::vector<std::string> out;
    for (auto& line : read_lines(path)) {
        if (!line.empty() && line.front() != '#') out.push_back(std::move(line));
    }
    return out;
}

std::vector<std::string> data_list(const std::optional<std::string>& path, const std::vector<std::string>& fallback) {
    return path ? read_list(*path) : fallback;
}

} // namespace

void register_corpus_commands(CLI::App& app, Context& ctx) {
    // ingest --------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("ingest", "Validate, window and tokenize a raw comment dump");
        path_flag(cmd, ctx, "raw_comments", "raw comment JSONL (id, video_id, user_id, timestamp, like_count, text)");
        path_flag(cmd, ctx, "comments", "output: normalized comment JSONL");
        path_flag(cmd, ctx, "tokenized", "output: tokenized comment JSONL");
        path_flag(cmd, ctx, "gazetteer", "alias<TAB>country TSV; enables nationality extraction");
        path_flag(cmd, ctx, "countries", "output: country attribution JSON");
        path_flag(cmd, ctx, "volitional_verbs", "volitional verb list (one per line)");
        path_flag(cmd, ctx, "trigrams", "output: collective intent trigram TSV");
        auto since = std::make_shared<std::string>();
        auto until = std::make_shared<std::string>();
        auto multi = std::make_shared<bool>(false);
        cmd->add_option("--since", *since, "keep comments at or after this UTC date/time");
        cmd->add_option("--until", *until, "keep comments before this UTC date/time");
        cmd->add_flag("--multi-attribution", *multi, "count a user toward every country they mention");
        cmd->callback([&ctx, since, until, multi] {
            std::optional<TimeWindow> window;
            if (!since->empty() || !until->empty()) {
                TimeWindow w{Timestamp::min(), Timestamp::max()};
                if (!since->empty()) w.begin = parse_timestamp(*since);
                if (!until->empty()) w.end = parse_timestamp(*until);
                window = w;
            }
            auto comments = load_comments(ctx.input("raw_comments"), window);
            std::stable_sort(comments.begin(), comments.end(), [](const Comment& a, const Comment& b) {
                return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
            });
            const auto tokenized = tokenize_all(comments);
            save_comments(ctx.output("comments"), comments);
            save_tokenized(ctx.output("tokenized"), tokenized);
            const auto empty = std::count_if(tokenized.begin(), tokenized.end(),
                                             [](const TokenizedComment& t) { return t.tokens.empty(); });
            std::cout << "ingested " << comments.size() << " comments (" << empty << " with no tokens)\n";

            if (auto g = ctx.optional_input("gazetteer"); g && ctx.path("countries")) {
                const auto gazetteer = Gazetteer::load(*g);
                const auto attr = extract_country_mentions(comments, default_nationality_templates(), gazetteer, *multi);
                json j = json::object();
                for (const auto& [country, stats] : attr.countries) {
                    j[country] = {{"users", stats.users.size()}, {"mentions", stats.mentions}};
                }
                write_json(ctx.output("countries"), j);
                std::cout << "nationality mentions: " << attr.countries.size() << " countries, "
                          << attr.user_country.size() << " attributed users\n";
            }
            if (ctx.path("trigrams")) {
                const auto verbs = data_list(ctx.optional_input("volitional_verbs"), default_volitional_verbs());
                const auto ranked = collective_intent_trigrams(tokenized, verbs);
                auto out = open_output(ctx.output("trigrams"));
                out << "trigram\tfrequency\tglobal_rank\n";
                for (const auto& t : ranked) out << t.trigram << '\t' << t.frequency << '\t' << t.global_rank << '\n';
                std::cout << "collective intent trigrams: " << ranked.size() << '\n';
            }
        });
    }

    // build-queries ------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("build-queries", "Expand seed queries with news channel names");
        path_flag(cmd, ctx, "seed_queries", "seed query list");
        path_flag(cmd, ctx, "related_queries", "related query list");
        path_flag(cmd, ctx, "news_channels", "news channel list");
        path_flag(cmd, ctx, "queries", "output: final query list");
        cmd->callback([&ctx] {
            std::vector<std::string> seed;
            if (auto p = ctx.optional_input("seed_queries")) seed = read_list(*p);
            const auto qs = build_query_set(seed, read_list(ctx.input("related_queries")),
                                            read_list(ctx.input("news_channels")));
            auto out = open_output(ctx.output("queries"));
            for (const auto& q : qs.final) out << q << '\n';
            std::cout << qs.related.size() << " related x " << qs.news_channels.size() << " channels -> "
                      << qs.final.size() << " final queries\n";
        });
    }

    // filter-videos ------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("filter-videos", "Keep relevant videos with enough comments");
        path_flag(cmd, ctx, "videos", "video JSONL (video_id, relevant, comment_count)");
        path_flag(cmd, ctx, "comments", "comment JSONL; when given, comment counts are recomputed");
        path_flag(cmd, ctx, "popular_videos", "output: filtered video JSONL");
        auto min_comments = std::make_shared<std::size_t>(kDefaultMinComments);
        cmd->add_option("--min-comments", *min_comments, "minimum comments per video")->capture_default_str();
        cmd->callback([&ctx, min_comments] {
            auto videos = load_videos(ctx.input("videos"));
            if (auto c = ctx.optional_input("comments")) count_video_comments(videos, load_comments(*c));
            const auto kept = filter_popular(videos, *min_comments);
            save_videos(ctx.output("popular_videos"), kept);
            std::cout << "kept " << kept.size() << " of " << videos.size() << " videos (>= " << *min_comments
                      << " comments, relevant)\n";
        });
    }
}

} // namespace commentlab::cli
