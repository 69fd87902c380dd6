#include <gtest/gtest.h>

#include <cmath>

#include <commentlab/hope.hpp>

#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace commentlab;
using commentlab::testing::TempDir;

namespace {

LogisticProblem random_problem(std::size_t n, std::size_t dim, Rng& rng) {
    LogisticProblem p;
    p.dim = dim;
    for (std::size_t i = 0; i < n; ++i) {
        SparseRow row;
        for (std::size_t j = 0; j < dim; ++j) {
            if (rng.uniform() < 0.4) row.emplace_back(j, rng.normal());
        }
        p.rows.push_back(row);
        p.labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
    }
    return p;
}

// Pairwise definition: P(score_pos > score_neg) + 0.5 P(tie).
double auc_oracle(const std::vector<double>& s, const std::vector<bool>& y) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (!y[i] || y[j]) continue;
            den += 1;
            num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    }
    return num / den;
}

// One n-gram feature "good" with weight w; intent and embedding off.
HopeClassifier toy_classifier(double w, double bias) {
    HopeClassifier c;
    c.vocab.add("good");
    c.weights = {w, 0.0};
    c.bias = bias;
    c.features = {true, false, false};
    return c;
}

PoolItem pool_item(std::string id, int week, const std::string& text, const NgramVocab& vocab) {
    PoolItem p;
    p.comment_id = std::move(id);
    p.week_bucket = week;
    p.tokens = tokenize(text);
    p.features = featurize(p.tokens, nullptr, nullptr, vocab);
    return p;
}

} // namespace

TEST(Ngrams, AllOrdersUpToThree) {
    const auto g = extract_ngrams(tokenize("we want peace"));
    const std::map<std::string, int> expected{{"we", 1},      {"want", 1},       {"peace", 1},
                                              {"we want", 1}, {"want peace", 1}, {"we want peace", 1}};
    EXPECT_EQ(g, expected);
    EXPECT_EQ(extract_ngrams(tokenize("a a a")).at("a a"), 2);
    EXPECT_TRUE(extract_ngrams({}).empty());
}

TEST(Ngrams, VocabMinDocumentFrequency) {
    const Tokens a = tokenize("x y"), b = tokenize("x z"), c = tokenize("x y");
    const auto v = NgramVocab::fit({&a, &b, &c}, 2);
    EXPECT_TRUE(v.find("x"));
    EXPECT_TRUE(v.find("x y"));
    EXPECT_FALSE(v.find("z"));
    const auto f = featurize(tokenize("x x q"), nullptr, nullptr, v);
    ASSERT_EQ(f.ngram_features.size(), 1u);
    EXPECT_DOUBLE_EQ(f.ngram_features[0].second, 2.0);
}

TEST(FeatureSet, Names) {
    EXPECT_EQ((FeatureSet{true, false, false}).name(), "n-grams");
    EXPECT_EQ((FeatureSet{true, true, true}).name(), "n-grams + I + FT");
    EXPECT_EQ((FeatureSet{false, true, false}).name(), "I");
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = random_problem(40, 8, rng);
        const double lambda = 0.1 * trial;
        LogisticParams w{Vector(8), rng.normal()};
        for (double& x : w.weights) x = rng.normal();
        const auto g = logistic_gradient(p, w, lambda);
        const double h = 1e-5;
        for (std::size_t j = 0; j <= 8; ++j) {
            auto plus = w, minus = w;
            double& a = j < 8 ? plus.weights[j] : plus.bias;
            double& b = j < 8 ? minus.weights[j] : minus.bias;
            a += h;
            b -= h;
            const double numeric = (logistic_objective(p, plus, lambda) - logistic_objective(p, minus, lambda)) / (2 * h);
            const double analytic = j < 8 ? g.weights[j] : g.bias;
            EXPECT_NEAR(analytic, numeric, 1e-6);
        }
    }
}

TEST(Logistic, ObjectiveStableForLargeMargins) {
    LogisticProblem p;
    p.dim = 1;
    p.rows = {{{0, 1.0}}, {{0, -1.0}}};
    p.labels = {1, 0};
    const LogisticParams w{{800.0}, 0.0};
    EXPECT_TRUE(std::isfinite(logistic_objective(p, w, 0.0)));
    EXPECT_NEAR(logistic_objective(p, w, 0.0), 0.0, 1e-12);
    const LogisticParams bad{{-800.0}, 0.0};
    EXPECT_NEAR(logistic_objective(p, bad, 0.0), 800.0, 1e-9);
}

TEST(Logistic, FitDecreasesObjectiveAndConverges) {
    Rng rng(5);
    const auto p = random_problem(200, 10, rng);
    OptimizerTrace trace;
    const auto w = fit_logistic(p, 0.1, {}, &trace);
    ASSERT_GE(trace.objective.size(), 2u);
    for (std::size_t i = 1; i < trace.objective.size(); ++i) EXPECT_LE(trace.objective[i], trace.objective[i - 1]);
    EXPECT_LT(trace.final_gradient_norm, 1e-5);
    EXPECT_NEAR(trace.objective.back(), logistic_objective(p, w, 0.1), 1e-12);
}

TEST(Kappa, FixedPoints) {
    const std::vector<int> a{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    EXPECT_DOUBLE_EQ(cohen_kappa(a, a), 1.0);
    // p_o = 0.5, p_e = 0.5
    EXPECT_DOUBLE_EQ(cohen_kappa(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 1, 0}), 0.0);
    // Two disagreements out of ten with balanced margins: p_o = 0.8, p_e = 0.5.
    const std::vector<int> b{1, 1, 1, 1, 0, 0, 0, 0, 0, 1};
    EXPECT_DOUBLE_EQ(observed_agreement(a, b), 0.8);
    EXPECT_NEAR(cohen_kappa(a, b), 0.6, 1e-12);
    // Constant identical raters: chance agreement 1.
    EXPECT_DOUBLE_EQ(cohen_kappa(std::vector<int>{1, 1}, std::vector<int>{1, 1}), 1.0);
    EXPECT_THROW(cohen_kappa(a, std::vector<int>{1}), Error);
}

TEST(Kappa, MatchesContingencyTableOracle) {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = rng.between(2, 40);
        std::vector<int> a, b;
        for (std::size_t i = 0; i < n; ++i) {
            a.push_back(static_cast<int>(rng.index(3)));
            b.push_back(rng.uniform() < 0.6 ? a.back() : static_cast<int>(rng.index(3)));
        }
        double table[3][3] = {};
        for (std::size_t i = 0; i < n; ++i) table[a[i]][b[i]] += 1.0 / static_cast<double>(n);
        double po = 0, pe = 0;
        for (int i = 0; i < 3; ++i) {
            po += table[i][i];
            double row = 0, col = 0;
            for (int j = 0; j < 3; ++j) {
                row += table[i][j];
                col += table[j][i];
            }
            pe += row * col;
        }
        const double expected = pe >= 1.0 - 1e-15 ? 1.0 : (po - pe) / (1 - pe);
        EXPECT_NEAR(cohen_kappa(a, b), expected, 1e-9);
        EXPECT_LE(cohen_kappa(a, b), 1.0 + 1e-12);
    }
}

TEST(Metrics, AucMatchesPairwiseOracleWithTies) {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s;
        std::vector<bool> y;
        const std::size_t n = rng.between(2, 30);
        for (std::size_t i = 0; i < n; ++i) {
            s.push_back(static_cast<double>(rng.index(5)) / 4.0);
            y.push_back(rng.uniform() < 0.5);
        }
        y[0] = true;
        y[1] = false;
        EXPECT_NEAR(roc_auc(s, y), auc_oracle(s, y), 1e-12);
    }
    EXPECT_DOUBLE_EQ(roc_auc({0.1, 0.2}, {true, true}), 0.5);
}

TEST(Metrics, BinaryAndThreshold) {
    const auto m = binary_metrics({0.9, 0.6, 0.4, 0.1}, {true, false, true, false}, 0.5);
    EXPECT_DOUBLE_EQ(m.precision, 0.5);
    EXPECT_DOUBLE_EQ(m.recall, 0.5);
    EXPECT_DOUBLE_EQ(m.f1, 0.5);
    EXPECT_DOUBLE_EQ(select_threshold({0.1, 0.2, 0.8, 0.9}, {false, false, true, true}), 0.5);
    EXPECT_DOUBLE_EQ(select_threshold({0.1, 0.3, 0.35, 0.4}, {false, false, true, true}), 0.325);
    const auto ms = mean_std({1.0, 2.0, 3.0});
    EXPECT_DOUBLE_EQ(ms.mean, 2.0);
    EXPECT_DOUBLE_EQ(ms.std, 1.0);
}

TEST(Split, StratifiedProportionsAndDisjoint) {
    Rng rng(1);
    std::vector<bool> y;
    for (int i = 0; i < 300; ++i) y.push_back(i % 3 == 0);
    const auto s = stratified_split(y, rng);
    std::set<std::size_t> all;
    for (const auto* part : {&s.train, &s.validation, &s.test}) all.insert(part->begin(), part->end());
    EXPECT_EQ(all.size(), 300u);
    EXPECT_EQ(s.train.size() + s.validation.size() + s.test.size(), 300u);
    auto positives = [&](const std::vector<std::size_t>& idx) {
        return std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return y[i]; });
    };
    EXPECT_EQ(positives(s.test), 10);
    EXPECT_EQ(s.test.size(), 30u);
    EXPECT_EQ(positives(s.validation), 10);
    EXPECT_EQ(s.validation.size(), 30u);

    Rng r2(1);
    EXPECT_THROW(stratified_split({true, true, false, false, false}, r2), Error);
}

TEST(Classifier, TrainRejectsSingleClass) {
    auto data = commentlab::testing::separable_hope_set(10, 1);
    for (auto& e : data) e.label = HopeLabel::hope;
    const auto prepared = prepare_examples(data, nullptr, nullptr);
    EXPECT_THROW(train(prepared, {}), Error);
}

TEST(Classifier, IndeterminateExamplesDropped) {
    auto data = commentlab::testing::separable_hope_set(10, 1);
    data[0].label = HopeLabel::indeterminate;
    EXPECT_EQ(prepare_examples(data, nullptr, nullptr).size(), 19u);
}

TEST(Classifier, SeparableSetEvaluation) {
    const auto data = commentlab::testing::separable_hope_set(200, 7);
    const auto prepared = prepare_examples(data, nullptr, nullptr);
    EvalOptions opt;
    opt.runs = 10;
    opt.features = {true, false, false};
    const auto s = evaluate_repeated(prepared, opt);
    EXPECT_EQ(s.details.size(), 10u);
    EXPECT_GE(s.f1.mean, 0.99);
    EXPECT_GE(s.auc.mean, 0.99);
    EXPECT_LE(s.f1.std, 0.01);
}

TEST(Classifier, EvaluationNeedsFiftyPerClass) {
    const auto prepared = prepare_examples(commentlab::testing::separable_hope_set(49, 1), nullptr, nullptr);
    EXPECT_THROW(evaluate_repeated(prepared, {}), Error);
}

TEST(Classifier, IntentFeatureHelpsOnNoisySet) {
    const auto set = commentlab::testing::noisy_hope_set(300, 11);
    PhraseLexicon lex;
    for (const auto& [p, pol] : set.phrases) lex.add(p, pol > 0 ? Polarity::peace : Polarity::war);
    const auto prepared = prepare_examples(set.examples, &lex, nullptr);
    EvalOptions opt;
    opt.runs = 5;
    opt.features = {true, false, false};
    const double base = evaluate_repeated(prepared, opt).auc.mean;
    opt.features = {true, true, false};
    const double with_intent = evaluate_repeated(prepared, opt).auc.mean;
    EXPECT_GT(with_intent, base);
}

TEST(Classifier, PersistenceRoundTrip) {
    TempDir dir;
    const auto data = commentlab::testing::separable_hope_set(30, 2);
    const auto prepared = prepare_examples(data, nullptr, nullptr);
    TrainOptions to;
    to.features = {true, false, false};
    auto c = train(prepared, to);
    c.threshold = 0.42;
    save_hope_classifier(dir.file("c.json"), c);
    const auto back = load_hope_classifier(dir.file("c.json"));
    EXPECT_DOUBLE_EQ(back.threshold, 0.42);
    EXPECT_EQ(back.vocab.grams(), c.vocab.grams());
    for (const auto& e : prepared) EXPECT_DOUBLE_EQ(probability_of(back, e), probability_of(c, e));

    dir.write("bad.json", R"({"lambda":1,"threshold":0.5,"bias":0,"feature_vocab":["a"],"weights":[1]})");
    EXPECT_THROW(load_hope_classifier(dir.file("bad.json")), Error);
}

TEST(LabeledIo, RoundTrip) {
    TempDir dir;
    auto data = commentlab::testing::separable_hope_set(3, 1);
    data[0].annotator_labels = {{"ann1", HopeLabel::hope}, {"ann2", HopeLabel::not_hope}};
    save_labeled(dir.file("l.jsonl"), data);
    const auto back = load_labeled(dir.file("l.jsonl"));
    ASSERT_EQ(back.size(), data.size());
    EXPECT_EQ(back[0].annotator_labels, data[0].annotator_labels);
    EXPECT_EQ(back[1].tokens, data[1].tokens);
    EXPECT_EQ(back[2].week_bucket, data[2].week_bucket);
    EXPECT_THROW(parse_hope_label("maybe"), Error);
}

TEST(Uncertainty, NearestHalfPerBucket) {
    const std::vector<ScoredItem> scored{{"a", 1, 0.9}, {"b", 1, 0.625}, {"c", 1, 0.375}, {"d", 1, 0.1},
                                         {"e", 2, 0.5}, {"f", 3, 0.7},  {"g", 3, 0.2},  {"h", 3, 0.5625}};
    const auto out = select_uncertain(scored, 5);
    std::vector<std::string> ids;
    for (const auto& s : out) ids.push_back(s.comment_id);
    // quota: bucket1 2, bucket2 1, bucket3 2; b/c tie at margin 0.125 -> id order
    EXPECT_EQ(ids, (std::vector<std::string>{"b", "c", "e", "h", "f"}));
    EXPECT_THROW(select_uncertain({}, 3), Error);
}

TEST(Uncertainty, AllocationRedealsShortfall) {
    const auto q = detail::allocate({{1, 5}, {2, 1}, {3, 5}}, 7);
    EXPECT_EQ(q.at(1), 3u);
    EXPECT_EQ(q.at(2), 1u);
    EXPECT_EQ(q.at(3), 3u);
    const auto all = detail::allocate({{1, 2}, {2, 1}}, 10);
    EXPECT_EQ(all.at(1) + all.at(2), 3u);
}

TEST(Uncertainty, SkipsLabeled) {
    const auto c = toy_classifier(2.0, -1.0);
    std::vector<PoolItem> pool;
    for (int i = 0; i < 6; ++i) pool.push_back(pool_item("p" + std::to_string(i), 1 + i % 2, i % 2 ? "good" : "bad", c.vocab));
    const auto out = uncertainty_sample(c, pool, 3, {"p0", "p1"});
    EXPECT_EQ(out.size(), 3u);
    for (const auto& s : out) {
        EXPECT_NE(s.comment_id, "p0");
        EXPECT_NE(s.comment_id, "p1");
    }
}

TEST(ActiveLearning, RoundZeroKeywordAndRandomHalves) {
    const auto c = toy_classifier(1.0, 0.0);
    PhraseLexicon keywords;
    keywords.add("peace", Polarity::peace);
    std::vector<PoolItem> pool;
    for (int i = 0; i < 40; ++i) {
        pool.push_back(pool_item("p" + std::to_string(i), 1 + i % 4, i % 3 == 0 ? "we want peace" : "nothing here", c.vocab));
    }
    ActiveLearningOptions opt;
    opt.batch_size = 10;
    const auto plan = plan_active_learning_round(nullptr, pool, {"p0"}, keywords, opt);
    EXPECT_EQ(plan.keyword_seeded.size(), 5u);
    EXPECT_EQ(plan.random.size(), 5u);
    const auto ids = plan.all_ids();
    EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), 10u);
    for (const auto& id : plan.keyword_seeded) {
        EXPECT_EQ(std::stoi(id.substr(1)) % 3, 0);
        EXPECT_NE(id, "p0");
    }
    const auto again = plan_active_learning_round(nullptr, pool, {"p0"}, keywords, opt);
    EXPECT_EQ(again.all_ids(), ids);
}

TEST(ActiveLearning, LaterRoundSpotChecksAndUncertain) {
    const auto c = toy_classifier(8.0, -4.0); // "good" -> ~0.98, else ~0.018
    std::vector<PoolItem> pool;
    for (int i = 0; i < 60; ++i) {
        const std::string text = i < 20 ? "good" : i < 40 ? "bad" : "good good maybe";
        pool.push_back(pool_item("p" + std::to_string(i), 1 + i % 2, text, c.vocab));
    }
    ActiveLearningOptions opt;
    opt.batch_size = 40;
    const auto plan = plan_active_learning_round(&c, pool, {}, PhraseLexicon{}, opt);
    EXPECT_EQ(plan.spot_checks.size(), 2u);
    EXPECT_EQ(plan.uncertain.size(), 38u);
    for (const auto& s : plan.spot_checks) EXPECT_TRUE(s.probability > 0.95 || s.probability < 0.05);
    const auto ids = plan.all_ids();
    EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), ids.size());

    std::set<std::string> everyone;
    for (const auto& p : pool) everyone.insert(p.comment_id);
    EXPECT_THROW(plan_active_learning_round(&c, pool, everyone, PhraseLexicon{}, opt), Error);
}

TEST(Wild, QuotaWarningsAndThreshold) {
    auto c = toy_classifier(4.0, -2.0);
    c.threshold = 0.5;
    std::vector<WildCandidate> cands;
    const auto d1 = utc_day(parse_timestamp("2019-02-14"));
    const auto d2 = utc_day(parse_timestamp("2019-02-15"));
    for (int i = 0; i < 6; ++i) {
        cands.push_back({"a" + std::to_string(i), d1, featurize(tokenize(i < 3 ? "good" : "bad"), nullptr, nullptr, c.vocab)});
    }
    cands.push_back({"b0", d2, featurize(tokenize("good"), nullptr, nullptr, c.vocab)});
    const auto r = wild_run(c, cands, 4, 9);
    EXPECT_EQ(r.sampled_per_day.at(d1), 4u);
    EXPECT_EQ(r.sampled_per_day.at(d2), 1u);
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_NE(r.warnings[0].find("2019-02-15"), std::string::npos);
    for (const auto& p : r.positives) EXPECT_GE(p.probability, 0.5);
    EXPECT_TRUE(std::any_of(r.positives.begin(), r.positives.end(), [](const auto& p) { return p.comment_id == "b0"; }));
}

TEST(Wild, VerificationPrecision) {
    const std::vector<WildPositive> pos{{"a", 0.9}, {"b", 0.8}, {"c", 0.7}};
    const auto none = verify_wild(pos, {});
    EXPECT_FALSE(none.precision);
    EXPECT_EQ(none.predicted, 3u);
    const auto v = verify_wild(pos, {{"a", {true, {"peace", "empathy"}}}, {"b", {false, {}}}});
    ASSERT_TRUE(v.precision);
    EXPECT_DOUBLE_EQ(*v.precision, 0.5);
    EXPECT_EQ(v.criteria_breakdown.at("peace"), 1u);
}
