#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include <commentlab/io.hpp>

#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using commentlab::json;
using commentlab::testing::slurp;
using commentlab::testing::TempDir;

namespace {

struct Run {
    int code = -1;
    std::string output;
};

Run cli(const TempDir& dir, const std::string& args) {
    const std::string log = dir.file("cli.log");
    const std::string cmd = std::string("\"") + COMMENTLAB_CLI + "\" " + args + " > \"" + log + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

std::string comment_line(const std::string& id, const std::string& user, const std::string& ts, int likes,
                         const std::string& text) {
    return json{{"id", id}, {"video_id", "v1"}, {"user_id", user}, {"timestamp", ts}, {"like_count", likes}, {"text", text}}
               .dump() +
           "\n";
}

std::string lines(std::size_t n, const std::string& stem) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += stem + std::to_string(i) + "\n";
    return s;
}

} // namespace

TEST(Cli, MissingArtifactNamed) {
    TempDir dir;
    const auto r = cli(dir, "intent-score --comments " + dir.file("nope.jsonl") + " --lexicon " + dir.write("l.tsv", "a\twar\n") + " --intent-scores " +
                                dir.file("o.jsonl"));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.output.find("comments"), std::string::npos) << r.output;
    const auto unset = cli(dir, "intent-trends");
    EXPECT_EQ(unset.code, 3);
    EXPECT_NE(unset.output.find("missing artifact"), std::string::npos) << unset.output;
}

TEST(Cli, BadConfigFails) {
    TempDir dir;
    const auto cfg = dir.write("bad.json", R"({"hope": {"runs": "x"}})");
    const auto r = cli(dir, "-c " + cfg + " build-queries");
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.output.find("hope.runs"), std::string::npos) << r.output;
    EXPECT_NE(cli(dir, "no-such-command").code, 0);
}

TEST(Cli, BuildQueriesCount) {
    TempDir dir;
    const auto r = cli(dir, "build-queries --related-queries " + dir.write("rel.txt", lines(207, "query")) +
                                " --news-channels " + dir.write("news.txt", lines(29, "channel")) + " --queries " +
                                dir.file("q.txt"));
    ASSERT_EQ(r.code, 0) << r.output;
    const auto q = commentlab::read_lines(dir.file("q.txt"));
    EXPECT_EQ(q.size(), 6210u);
}

TEST(Cli, IntentPipelineWithConfigPaths) {
    TempDir dir;
    const std::string raw = comment_line("1", "a", "2019-02-26T01:00:00Z", 10, "We want war!") +
                            comment_line("2", "b", "2019-02-26T05:00:00Z", 30, "say no to war") +
                            comment_line("3", "c", "2019-02-26T08:00:00Z", 60, "hello") +
                            comment_line("4", "a", "2019-02-27T08:00:00Z", 0, "we want peace");
    dir.write("raw.jsonl", raw);
    dir.write("lex.tsv", "we want war\twar\nsay no to war\tpeace\nwe want peace\tpeace\n");
    const json cfg{{"paths",
                    {{"raw_comments", dir.file("raw.jsonl")},
                     {"comments", dir.file("out/comments.jsonl")},
                     {"tokenized", dir.file("out/tok.jsonl")},
                     {"lexicon", dir.file("lex.tsv")},
                     {"intent_scores", dir.file("out/scores.jsonl")},
                     {"trends", dir.file("out/trends.csv")},
                     {"overlap", dir.file("out/overlap.json")}}}};
    const auto c = dir.write("cfg.json", cfg.dump());
    for (const std::string step : {"ingest", "intent-score", "intent-trends", "intent-overlap"}) {
        const auto r = cli(dir, "-c " + c + " " + step);
        ASSERT_EQ(r.code, 0) << step << ": " << r.output;
    }
    const auto csv = slurp(dir.file("out/trends.csv"));
    EXPECT_NE(csv.find("2019-02-26,3,100,0.333333,0.333333,0.300000,0.100000,0.666667"), std::string::npos) << csv;
    EXPECT_NE(csv.find("2019-02-27,1,0,1.000000,0.000000,0.000000,0.000000,1.000000"), std::string::npos) << csv;
    const auto overlap = json::parse(slurp(dir.file("out/overlap.json")));
    EXPECT_DOUBLE_EQ(overlap.at("jaccard").get<double>(), 1.0 / 2.0);
}

TEST(Cli, EmbedAndLangidRerunsAreByteIdentical) {
    TempDir dir;
    commentlab::testing::LanguageCorpus corpus(5, 80);
    std::string raw;
    for (const auto& d : corpus.generate(60, 1, "d")) raw += comment_line(d.id, "u", "2019-02-26T01:00:00Z", 0, d.text);
    dir.write("raw.jsonl", raw);
    std::string outputs[2];
    for (int run = 0; run < 2; ++run) {
        const std::string o = dir.file("run" + std::to_string(run));
        const std::string common = " --tokenized " + o + "/tok.jsonl";
        ASSERT_EQ(cli(dir, "ingest --raw-comments " + dir.file("raw.jsonl") + " --comments " + o + "/c.jsonl" + common).code, 0);
        auto r = cli(dir, "train-embed" + common + " --embed-model " + o +
                              "/m.bin --dim 16 --epochs 2 --buckets 5000 --threads 1 --seed 3");
        ASSERT_EQ(r.code, 0) << r.output;
        r = cli(dir, "langid-fit" + common + " --embed-model " + o + "/m.bin --cluster-model " + o + "/k.json --seed 2");
        ASSERT_EQ(r.code, 0) << r.output;
        outputs[run] = slurp(o + "/m.bin") + slurp(o + "/k.json") + slurp(o + "/tok.jsonl");
    }
    EXPECT_FALSE(outputs[0].empty());
    EXPECT_EQ(outputs[0], outputs[1]);
}
