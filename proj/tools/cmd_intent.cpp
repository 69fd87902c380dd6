#include <iostream>

#include "cli_support.hpp"

namespace commentlab::cli {

namespace {

std::vector<std::string> stopword_list(const Context& ctx) {
    if (auto p = ctx.optional_input("stopwords")) {
        std::vector<std::string> words;
        for (auto& w : read_lines(*p)) {
            if (!w.empty() && w.front() != '#') words.push_back(std::move(w));
        }
        return words;
    }
    return default_english_stopwords();
}

json shifted_json(const std::vector<ShiftedToken>& tokens) {
    json arr = json::array();
    for (const auto& t : tokens) arr.push_back({{"token", t.token}, {"score", t.score}});
    return arr;
}

} // namespace

void register_intent_commands(CLI::App& app, Context& ctx) {
    // intent-score -------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("intent-score", "Score comments against the war/peace phrase lexicon");
        path_flag(cmd, ctx, "comments", "comment JSONL");
        path_flag(cmd, ctx, "lexicon", "phrase<TAB>peace|war|neutral TSV");
        path_flag(cmd, ctx, "intent_scores", "output: per-comment score JSONL");
        cmd->callback([&ctx] {
            const auto lexicon = PhraseLexicon::load(ctx.input("lexicon"));
            const auto comments = load_comments(ctx.input("comments"));
            const auto scores = score_comments(comments, lexicon);
            save_intent_scores(ctx.output("intent_scores"), scores);
            std::size_t peace = 0, war = 0;
            for (const auto& s : scores) {
                peace += s.intent == IntentClass::peace;
                war += s.intent == IntentClass::war;
            }
            const auto cov = overall_coverage(comments, scores);
            std::cout << "scored " << scores.size() << " comments with " << lexicon.size() << " phrases: " << peace
                      << " peace, " << war << " war, " << scores.size() - peace - war << " neutral\n"
                      << "coverage " << fixed(100 * cov.comments, 2) << "% of comments, " << fixed(100 * cov.likes, 2)
                      << "% of likes\n";
        });
    }

    // intent-trends ------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("intent-trends", "Daily peace/war shares by comments and likes");
        path_flag(cmd, ctx, "comments", "comment JSONL");
        path_flag(cmd, ctx, "intent_scores", "per-comment score JSONL");
        path_flag(cmd, ctx, "trends", "output: daily trend CSV");
        cmd->callback([&ctx] {
            const auto comments = load_comments(ctx.input("comments"));
            const auto trends = daily_trends(comments, load_intent_scores(ctx.input("intent_scores")));
            auto out = open_output(ctx.output("trends"));
            write_trends_csv(out, trends);
            std::cout << trends.size() << " days";
            if (!trends.empty()) std::cout << ", " << format_day(trends.front().date) << " to " << format_day(trends.back().date);
            std::cout << '\n';
        });
    }

    // intent-shift -------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("intent-shift", "Tokens whose frequency shifts most between two windows");
        path_flag(cmd, ctx, "comments", "comment JSONL");
        path_flag(cmd, ctx, "stopwords", "stopword list (one per line)");
        path_flag(cmd, ctx, "token_shift", "output: token shift JSON");
        auto a = std::make_shared<std::string>();
        auto b = std::make_shared<std::string>();
        auto days = std::make_shared<int>(0);
        auto top_n = std::make_shared<std::size_t>(0);
        auto keep = std::make_shared<bool>(false);
        cmd->add_option("--window-a", *a, "first window start date (YYYY-MM-DD, UTC)")->required();
        cmd->add_option("--window-b", *b, "second window start date (YYYY-MM-DD, UTC)")->required();
        cmd->add_option("--days", *days, "window length in days");
        cmd->add_option("--top-n", *top_n, "tokens per list");
        cmd->add_flag("--keep-stopwords", *keep, "rank stopwords too");
        cmd->callback([&ctx, cmd, a, b, days, top_n, keep] {
            auto cfg = ctx.config.intent;
            override_if(cmd, "--days", *days, cfg.window_days);
            override_if(cmd, "--top-n", *top_n, cfg.top_n);
            if (*keep) cfg.remove_stopwords = false;
            require(cfg.window_days >= 1, "window length must be at least one day");

            const auto comments = load_comments(ctx.input("comments"));
            const auto day_a = parse_day(*a), day_b = parse_day(*b);
            const auto stop = cfg.remove_stopwords ? stopword_list(ctx) : std::vector<std::string>{};
            const auto shift = token_shift(window_tokens(comments, day_a, cfg.window_days),
                                           window_tokens(comments, day_b, cfg.window_days), cfg.top_n, stop);
            write_json(ctx.output("token_shift"), {{"window_a", format_day(day_a)},
                                                   {"window_b", format_day(day_b)},
                                                   {"days", cfg.window_days},
                                                   {"rising_in_a", shifted_json(shift.rising_in_a)},
                                                   {"rising_in_b", shifted_json(shift.rising_in_b)}});
            auto show = [](const char* title, const std::vector<ShiftedToken>& v) {
                std::cout << title << ':';
                for (const auto& t : v) std::cout << ' ' << t.token;
                std::cout << '\n';
            };
            show("rising in window a", shift.rising_in_a);
            show("rising in window b", shift.rising_in_b);
        });
    }

    // intent-overlap -----------------------------------------------------
    {
        auto* cmd = app.add_subcommand("intent-overlap", "Users posting both peace and war comments");
        path_flag(cmd, ctx, "comments", "comment JSONL");
        path_flag(cmd, ctx, "intent_scores", "per-comment score JSONL");
        path_flag(cmd, ctx, "overlap", "output: overlap JSON");
        cmd->callback([&ctx] {
            const auto o = user_intent_overlap(load_intent_scores(ctx.input("intent_scores")),
                                               load_comments(ctx.input("comments")));
            write_json(ctx.output("overlap"), {{"peace_users", o.peace_users.size()},
                                               {"war_users", o.war_users.size()},
                                               {"both", o.both.size()},
                                               {"jaccard", o.jaccard},
                                               {"both_users", o.both}});
            std::cout << o.peace_users.size() << " peace users, " << o.war_users.size() << " war users, "
                      << o.both.size() << " both; jaccard " << fixed(o.jaccard) << '\n';
        });
    }
}

} // namespace commentlab::cli
