#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "embed.hpp"
#include "error.hpp"
#include "intent.hpp"
#include "io.hpp"
#include "random.hpp"
#include "text.hpp"

namespace commentlab {

// ---------------------------------------------------------------------------
// Labels and labelled data

enum class HopeLabel { hope, not_hope, indeterminate };

inline HopeLabel parse_hope_label(const std::string& s) {
    if (s == "hope") return HopeLabel::hope;
    if (s == "not_hope") return HopeLabel::not_hope;
    if (s == "indeterminate") return HopeLabel::indeterminate;
    throw Error("unknown hope label '" + s + "' (expected hope|not_hope|indeterminate)");
}

inline std::string to_string(HopeLabel l) {
    switch (l) {
    case HopeLabel::hope: return "hope";
    case HopeLabel::not_hope: return "not_hope";
    default: return "indeterminate";
    }
}

struct LabeledExample {
    std::string comment_id;
    std::string text;
    Tokens tokens;
    HopeLabel label = HopeLabel::indeterminate;
    int week_bucket = 1;
    std::map<std::string, HopeLabel> annotator_labels;
};

inline std::vector<LabeledExample> load_labeled(const std::string& path) {
    std::vector<LabeledExample> out;
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        LabeledExample e;
        e.comment_id = j.at("comment_id").get<std::string>();
        e.text = j.at("text").get<std::string>();
        e.tokens = tokenize(e.text);
        e.label = parse_hope_label(j.at("label").get<std::string>());
        e.week_bucket = j.value("week_bucket", 1);
        if (j.contains("annotator_labels")) {
            for (const auto& [who, l] : j.at("annotator_labels").items()) {
                e.annotator_labels[who] = parse_hope_label(l.get<std::string>());
            }
        }
        out.push_back(std::move(e));
    });
    return out;
}

inline void save_labeled(const std::string& path, const std::vector<LabeledExample>& examples) {
    auto out = open_output(path);
    for (const auto& e : examples) {
        json ann = json::object();
        for (const auto& [who, l] : e.annotator_labels) ann[who] = to_string(l);
        out << json{{"comment_id", e.comment_id},
                    {"text", e.text},
                    {"label", to_string(e.label)},
                    {"week_bucket", e.week_bucket},
                    {"annotator_labels", ann}}
                   .dump()
            << '\n';
    }
}

// ---------------------------------------------------------------------------
// Features

/// Counts of contiguous token n-grams with n in [1, max_n], joined by spaces.
inline std::map<std::string, int> extract_ngrams(const Tokens& tokens, std::size_t max_n = 3) {
    std::map<std::string, int> counts;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::string gram;
        for (std::size_t n = 1; n <= max_n && i + n <= tokens.size(); ++n) {
            if (n > 1) gram += ' ';
            gram += tokens[i + n - 1];
            ++counts[gram];
        }
    }
    return counts;
}

/// Frozen n-gram index built from training documents.
class NgramVocab {
public:
    static NgramVocab fit(const std::vector<const Tokens*>& docs, std::size_t min_df = 2) {
        std::map<std::string, std::size_t> df;
        for (const auto* d : docs) {
            for (const auto& [g, n] : extract_ngrams(*d)) ++df[g];
        }
        NgramVocab v;
        for (const auto& [g, n] : df) {
            if (n >= min_df) v.add(g);
        }
        return v;
    }

    void add(const std::string& gram) {
        if (index_.emplace(gram, grams_.size()).second) grams_.push_back(gram);
    }

    std::optional<std::size_t> find(const std::string& gram) const {
        auto it = index_.find(gram);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const { return grams_.size(); }
    const std::vector<std::string>& grams() const { return grams_; }

private:
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> grams_;
};

struct FeatureSet {
    bool ngrams = true;
    bool intent = true;
    bool embedding = true;

    std::string name() const {
        std::string s = ngrams ? "n-grams" : "";
        if (intent) s += s.empty() ? "I" : " + I";
        if (embedding) s += s.empty() ? "FT" : " + FT";
        return s;
    }
};

struct FeatureVector {
    std::vector<std::pair<std::size_t, double>> ngram_features; // vocab id -> count, ascending id
    int intent_score = 0;
    Vector embedding;
};

/// N-gram counts restricted to `vocab` (unseen n-grams dropped), the lexicon
/// intent score and the document embedding. Missing resources yield zeros.
inline FeatureVector featurize(const Tokens& tokens, const PhraseLexicon* lexicon, const EmbeddingModel* embedding,
                               const NgramVocab& vocab) {
    FeatureVector f;
    for (const auto& [g, n] : extract_ngrams(tokens)) {
        if (auto id = vocab.find(g)) f.ngram_features.emplace_back(*id, static_cast<double>(n));
    }
    std::sort(f.ngram_features.begin(), f.ngram_features.end());
    if (lexicon && !lexicon->empty()) f.intent_score = score_comment(tokens, *lexicon).score;
    if (embedding) f.embedding = embedding->doc_embedding(tokens).vector;
    return f;
}

using SparseRow = std::vector<std::pair<std::size_t, double>>;

/// Layout: [0, V) n-grams, V intent, V+1.. embedding dims.
inline SparseRow to_row(const FeatureVector& f, std::size_t vocab_size, const FeatureSet& set) {
    SparseRow row;
    if (set.ngrams) row = f.ngram_features;
    if (set.intent && f.intent_score != 0) row.emplace_back(vocab_size, static_cast<double>(f.intent_score));
    if (set.embedding) {
        for (std::size_t d = 0; d < f.embedding.size(); ++d) {
            if (f.embedding[d] != 0.0) row.emplace_back(vocab_size + 1 + d, f.embedding[d]);
        }
    }
    return row;
}

// ---------------------------------------------------------------------------
// L2-regularised logistic regression

struct LogisticProblem {
    std::vector<SparseRow> rows;
    std::vector<int> labels; // 1 = hope, 0 = not
    std::size_t dim = 0;
};

struct LogisticParams {
    Vector weights;
    double bias = 0.0;
};

/// mean_i [log(1 + e^z_i) - y_i z_i] + lambda/2 |w|^2, with z = w.x + b.
inline double logistic_objective(const LogisticProblem& p, const LogisticParams& w, double lambda) {
    double loss = 0.0;
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
        double z = w.bias;
        for (const auto& [j, x] : p.rows[i]) z += w.weights[j] * x;
        loss += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - p.labels[i] * z;
    }
    double reg = 0.0;
    for (double v : w.weights) reg += v * v;
    return loss / static_cast<double>(p.rows.size()) + 0.5 * lambda * reg;
}

/// Gradient of `logistic_objective`; the bias is not regularised.
inline LogisticParams logistic_gradient(const LogisticProblem& p, const LogisticParams& w, double lambda) {
    LogisticParams g{Vector(w.weights.size(), 0.0), 0.0};
    const double inv_n = 1.0 / static_cast<double>(p.rows.size());
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
        double z = w.bias;
        for (const auto& [j, x] : p.rows[i]) z += w.weights[j] * x;
        const double r = (sigmoid(z) - p.labels[i]) * inv_n;
        for (const auto& [j, x] : p.rows[i]) g.weights[j] += r * x;
        g.bias += r;
    }
    for (std::size_t j = 0; j < w.weights.size(); ++j) g.weights[j] += lambda * w.weights[j];
    return g;
}

struct OptimizerConfig {
    double gradient_tolerance = 1e-5;
    std::size_t max_iterations = 1000;
    double armijo = 1e-4;
};

struct OptimizerTrace {
    std::vector<double> objective; // value after each accepted step, starting at the initial point
    std::size_t iterations = 0;
    double final_gradient_norm = 0.0;
};

/// Full-batch gradient descent from zero. Steps start at the Barzilai-Borwein
/// length and are halved until the Armijo condition holds, so every accepted
/// step decreases the objective.
inline LogisticParams fit_logistic(const LogisticProblem& p, double lambda, const OptimizerConfig& cfg = {},
                                   OptimizerTrace* trace = nullptr) {
    LogisticParams w{Vector(p.dim, 0.0), 0.0};
    auto norm2 = [](const LogisticParams& g) {
        double s = g.bias * g.bias;
        for (double v : g.weights) s += v * v;
        return s;
    };
    double f = logistic_objective(p, w, lambda);
    LogisticParams g = logistic_gradient(p, w, lambda);
    OptimizerTrace local;
    local.objective.push_back(f);
    double step = 1.0;
    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
        const double gg = norm2(g);
        if (std::sqrt(gg) < cfg.gradient_tolerance) break;
        LogisticParams next{Vector(p.dim), 0.0};
        double f_next = f;
        bool accepted = false;
        for (int halvings = 0; halvings < 60; ++halvings) {
            for (std::size_t j = 0; j < p.dim; ++j) next.weights[j] = w.weights[j] - step * g.weights[j];
            next.bias = w.bias - step * g.bias;
            f_next = logistic_objective(p, next, lambda);
            if (f_next <= f - cfg.armijo * step * gg) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        LogisticParams g_next = logistic_gradient(p, next, lambda);
        // Barzilai-Borwein step for the next iteration: s.s / s.y
        double ss = 0.0, sy = 0.0;
        for (std::size_t j = 0; j < p.dim; ++j) {
            const double s = next.weights[j] - w.weights[j];
            ss += s * s;
            sy += s * (g_next.weights[j] - g.weights[j]);
        }
        const double sb = next.bias - w.bias;
        ss += sb * sb;
        sy += sb * (g_next.bias - g.bias);
        step = sy > 0.0 ? std::clamp(ss / sy, 1e-8, 1e8) : 1.0;
        w = std::move(next);
        g = std::move(g_next);
        f = f_next;
        local.objective.push_back(f);
        local.iterations = it + 1;
    }
    local.final_gradient_norm = std::sqrt(norm2(g));
    if (trace) *trace = std::move(local);
    return w;
}

// ---------------------------------------------------------------------------
// Hope classifier

struct HopeClassifier {
    double lambda = 1.0;
    double threshold = 0.5;
    double bias = 0.0;
    Vector weights; // |vocab| + 1 + embedding_dim
    NgramVocab vocab;
    FeatureSet features;
    std::size_t embedding_dim = 0;
    std::string embedding_model_ref;

    double linear_score(const FeatureVector& f) const {
        double z = bias;
        for (const auto& [j, x] : to_row(f, vocab.size(), features)) z += weights[j] * x;
        return z;
    }

    double probability(const FeatureVector& f) const { return sigmoid(linear_score(f)); }

    bool predict(const FeatureVector& f) const { return probability(f) >= threshold; }
};

struct TrainOptions {
    double lambda = 1.0;
    FeatureSet features;
    OptimizerConfig optimizer;
    std::size_t min_df = 2;
};

/// Featurised training data; n-gram ids refer to `vocab`.
struct PreparedExample {
    std::string comment_id;
    const Tokens* tokens = nullptr;
    int intent_score = 0;
    Vector embedding;
    bool positive = false;
};

/// Computes the split-independent features once. Indeterminate examples are dropped.
inline std::vector<PreparedExample> prepare_examples(const std::vector<LabeledExample>& examples,
                                                     const PhraseLexicon* lexicon, const EmbeddingModel* embedding) {
    std::vector<PreparedExample> out;
    for (const auto& e : examples) {
        if (e.label == HopeLabel::indeterminate) continue;
        PreparedExample p;
        p.comment_id = e.comment_id;
        p.tokens = &e.tokens;
        if (lexicon && !lexicon->empty()) p.intent_score = score_comment(e.tokens, *lexicon).score;
        if (embedding) p.embedding = embedding->doc_embedding(e.tokens).vector;
        p.positive = e.label == HopeLabel::hope;
        out.push_back(std::move(p));
    }
    return out;
}

namespace detail {

inline FeatureVector features_of(const PreparedExample& e, const NgramVocab& vocab) {
    FeatureVector f;
    for (const auto& [g, n] : extract_ngrams(*e.tokens)) {
        if (auto id = vocab.find(g)) f.ngram_features.emplace_back(*id, static_cast<double>(n));
    }
    std::sort(f.ngram_features.begin(), f.ngram_features.end());
    f.intent_score = e.intent_score;
    f.embedding = e.embedding;
    return f;
}

inline std::size_t embedding_dim_of(const std::vector<PreparedExample>& data) {
    for (const auto& e : data) {
        if (!e.embedding.empty()) return e.embedding.size();
    }
    return 0;
}

} // namespace detail

inline HopeClassifier train_on(const std::vector<PreparedExample>& data, const std::vector<std::size_t>& indices,
                               const TrainOptions& options, OptimizerTrace* trace = nullptr) {
    bool pos = false, neg = false;
    for (auto i : indices) (data[i].positive ? pos : neg) = true;
    if (!pos || !neg) throw Error("degenerate labels");

    HopeClassifier c;
    c.lambda = options.lambda;
    c.features = options.features;
    c.embedding_dim = detail::embedding_dim_of(data);
    std::vector<const Tokens*> docs;
    for (auto i : indices) docs.push_back(data[i].tokens);
    c.vocab = NgramVocab::fit(docs, options.min_df);

    LogisticProblem p;
    p.dim = c.vocab.size() + 1 + c.embedding_dim;
    for (auto i : indices) {
        p.rows.push_back(to_row(detail::features_of(data[i], c.vocab), c.vocab.size(), c.features));
        p.labels.push_back(data[i].positive ? 1 : 0);
    }
    const auto params = fit_logistic(p, options.lambda, options.optimizer, trace);
    c.weights = params.weights;
    c.bias = params.bias;
    return c;
}

inline HopeClassifier train(const std::vector<PreparedExample>& data, const TrainOptions& options,
                            OptimizerTrace* trace = nullptr) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return train_on(data, all, options, trace);
}

inline double probability_of(const HopeClassifier& c, const PreparedExample& e) {
    return c.probability(detail::features_of(e, c.vocab));
}

// ---------------------------------------------------------------------------
// Metrics

/// Area under the ROC curve via the Mann-Whitney rank statistic; tied scores
/// receive half credit. Returns 0.5 when either class is absent.
inline double roc_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
        i = j + 1;
    }
    double pos = 0, rank_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (positive[i]) {
            pos += 1;
            rank_sum += rank[i];
        }
    }
    const double neg = static_cast<double>(n) - pos;
    if (pos == 0 || neg == 0) return 0.5;
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

struct BinaryMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline BinaryMetrics binary_metrics(const std::vector<double>& probs, const std::vector<bool>& positive,
                                    double threshold) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool pred = probs[i] >= threshold;
        if (pred && positive[i]) tp += 1;
        if (pred && !positive[i]) fp += 1;
        if (!pred && positive[i]) fn += 1;
    }
    BinaryMetrics m;
    m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

/// F1-maximising threshold over midpoints between distinct probabilities;
/// ties prefer the threshold nearest 0.5. Falls back to 0.5 when no threshold
/// yields a positive F1.
inline double select_threshold(const std::vector<double>& probs, const std::vector<bool>& positive) {
    std::vector<double> sorted = probs;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<double> candidates{0.5};
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) candidates.push_back((sorted[i] + sorted[i + 1]) / 2.0);
    if (!sorted.empty()) candidates.push_back(sorted.front());
    double best_t = 0.5, best_f1 = 0.0;
    for (double t : candidates) {
        const double f1 = binary_metrics(probs, positive, t).f1;
        if (f1 > best_f1 || (f1 == best_f1 && f1 > 0 && std::abs(t - 0.5) < std::abs(best_t - 0.5))) {
            best_f1 = f1;
            best_t = t;
        }
    }
    return best_t;
}

// ---------------------------------------------------------------------------
// Repeated stratified evaluation

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

/// Per-class shuffle; each class contributes round(val_frac * n) validation and
/// round(test_frac * n) test items, the rest train.
inline Split stratified_split(const std::vector<bool>& positive, Rng& rng, double val_frac = 0.1,
                              double test_frac = 0.1) {
    Split s;
    for (bool cls : {true, false}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < positive.size(); ++i) {
            if (positive[i] == cls) idx.push_back(i);
        }
        const auto n_val = static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(idx.size())));
        const auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(idx.size())));
        if (n_val == 0 || n_test == 0 || n_val + n_test >= idx.size()) {
            throw Error("class too small for stratified split");
        }
        rng.shuffle(idx);
        s.test.insert(s.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
        s.validation.insert(s.validation.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test),
                            idx.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
        s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), idx.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.validation.begin(), s.validation.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd m;
    if (xs.empty()) return m;
    m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return m;
}

struct RunResult {
    double lambda = 0.0;
    double threshold = 0.5;
    BinaryMetrics test;
    double auc = 0.0;
    Split split;
};

struct EvalSummary {
    MeanStd precision, recall, f1, auc;
    std::size_t runs = 0;
    std::vector<RunResult> details;
};

struct EvalOptions {
    std::size_t runs = 100;
    std::uint64_t seed = 1;
    std::vector<double> lambdas{0.01, 0.1, 1.0, 10.0};
    FeatureSet features;
    OptimizerConfig optimizer;
    std::size_t min_per_class = 50;
    bool keep_splits = false;
};

/// Repeated random 80/10/10 stratified splits: each lambda in the grid is fit
/// on train; the lambda and threshold with the best validation F1 are scored
/// on test. Reports mean and sample standard deviation over runs.
inline EvalSummary evaluate_repeated(const std::vector<PreparedExample>& data, const EvalOptions& options) {
    std::vector<bool> positive;
    std::size_t n_pos = 0;
    for (const auto& e : data) {
        positive.push_back(e.positive);
        n_pos += e.positive;
    }
    if (n_pos < options.min_per_class || data.size() - n_pos < options.min_per_class) {
        throw Error("class too small for stratified split (need " + std::to_string(options.min_per_class) +
                    " per class)");
    }
    require(!options.lambdas.empty(), "evaluate_repeated: empty lambda grid");

    Rng rng(options.seed);
    std::vector<double> ps, rs, fs, aucs;
    EvalSummary summary;
    for (std::size_t run = 0; run < options.runs; ++run) {
        const Split split = stratified_split(positive, rng);
        auto labels_of = [&](const std::vector<std::size_t>& idx) {
            std::vector<bool> y;
            for (auto i : idx) y.push_back(positive[i]);
            return y;
        };
        const auto y_val = labels_of(split.validation);
        const auto y_test = labels_of(split.test);

        std::optional<HopeClassifier> best;
        double best_f1 = -1.0, best_auc = -1.0;
        for (double lambda : options.lambdas) {
            TrainOptions to;
            to.lambda = lambda;
            to.features = options.features;
            to.optimizer = options.optimizer;
            HopeClassifier c = train_on(data, split.train, to);
            std::vector<double> pv;
            for (auto i : split.validation) pv.push_back(probability_of(c, data[i]));
            c.threshold = select_threshold(pv, y_val);
            const double f1 = binary_metrics(pv, y_val, c.threshold).f1;
            const double auc = roc_auc(pv, y_val);
            if (f1 > best_f1 || (f1 == best_f1 && auc > best_auc)) {
                best_f1 = f1;
                best_auc = auc;
                best = std::move(c);
            }
        }
        std::vector<double> pt;
        for (auto i : split.test) pt.push_back(probability_of(*best, data[i]));
        RunResult r;
        r.lambda = best->lambda;
        r.threshold = best->threshold;
        r.test = binary_metrics(pt, y_test, best->threshold);
        r.auc = roc_auc(pt, y_test);
        if (options.keep_splits) r.split = split;
        ps.push_back(r.test.precision);
        rs.push_back(r.test.recall);
        fs.push_back(r.test.f1);
        aucs.push_back(r.auc);
        summary.details.push_back(std::move(r));
    }
    summary.precision = mean_std(ps);
    summary.recall = mean_std(rs);
    summary.f1 = mean_std(fs);
    summary.auc = mean_std(aucs);
    summary.runs = options.runs;
    return summary;
}

// ---------------------------------------------------------------------------
// Active learning

struct PoolItem {
    std::string comment_id;
    int week_bucket = 1;
    Tokens tokens;
    FeatureVector features;
};

struct ScoredItem {
    std::string comment_id;
    int week_bucket = 1;
    double probability = 0.5;
};

namespace detail {

/// Splits `total` across the buckets present, equally with the remainder
/// dealt round-robin in bucket order; shortfalls are re-dealt to buckets that
/// still have items.
inline std::map<int, std::size_t> allocate(const std::map<int, std::size_t>& available, std::size_t total) {
    std::map<int, std::size_t> quota;
    for (const auto& [b, n] : available) quota[b] = 0;
    std::size_t remaining = total;
    while (remaining > 0) {
        bool progressed = false;
        for (auto& [b, q] : quota) {
            if (remaining == 0) break;
            if (q < available.at(b)) {
                ++q;
                --remaining;
                progressed = true;
            }
        }
        if (!progressed) break;
    }
    return quota;
}

} // namespace detail

/// Items nearest p = 0.5 within each week bucket, stratified across buckets.
/// Ties in margin break by comment id.
inline std::vector<ScoredItem> select_uncertain(std::vector<ScoredItem> scored, std::size_t batch_size) {
    if (scored.empty()) throw Error("uncertainty_sample: empty pool");
    std::map<int, std::vector<ScoredItem>> buckets;
    for (auto& s : scored) buckets[s.week_bucket].push_back(std::move(s));
    std::map<int, std::size_t> available;
    for (auto& [b, items] : buckets) {
        std::sort(items.begin(), items.end(), [](const ScoredItem& x, const ScoredItem& y) {
            const double mx = std::abs(x.probability - 0.5), my = std::abs(y.probability - 0.5);
            return mx != my ? mx < my : x.comment_id < y.comment_id;
        });
        available[b] = items.size();
    }
    const auto quota = detail::allocate(available, batch_size);
    std::vector<ScoredItem> out;
    for (auto& [b, items] : buckets) {
        for (std::size_t i = 0; i < quota.at(b); ++i) out.push_back(items[i]);
    }
    return out;
}

inline std::vector<ScoredItem> uncertainty_sample(const HopeClassifier& classifier, const std::vector<PoolItem>& pool,
                                                  std::size_t batch_size, const std::set<std::string>& labeled) {
    std::vector<ScoredItem> scored;
    for (const auto& item : pool) {
        if (labeled.count(item.comment_id)) continue;
        scored.push_back({item.comment_id, item.week_bucket, classifier.probability(item.features)});
    }
    return select_uncertain(std::move(scored), batch_size);
}

struct ActiveLearningOptions {
    std::size_t batch_size = 200;
    double spot_check_fraction = 0.05;
    double confident_high = 0.95;
    double confident_low = 0.05;
    std::uint64_t seed = 1;
};

struct RoundPlan {
    std::vector<ScoredItem> uncertain;
    std::vector<ScoredItem> spot_checks;
    std::vector<std::string> keyword_seeded;
    std::vector<std::string> random;

    std::vector<std::string> all_ids() const {
        std::vector<std::string> ids;
        for (const auto& s : uncertain) ids.push_back(s.comment_id);
        for (const auto& s : spot_checks) ids.push_back(s.comment_id);
        ids.insert(ids.end(), keyword_seeded.begin(), keyword_seeded.end());
        ids.insert(ids.end(), random.begin(), random.end());
        return ids;
    }
};

namespace detail {

inline std::vector<std::string> stratified_random(const std::vector<const PoolItem*>& items, std::size_t n, Rng& rng) {
    std::map<int, std::vector<const PoolItem*>> buckets;
    for (const auto* p : items) buckets[p->week_bucket].push_back(p);
    std::map<int, std::size_t> available;
    for (auto& [b, v] : buckets) {
        rng.shuffle(v);
        available[b] = v.size();
    }
    const auto quota = allocate(available, n);
    std::vector<std::string> out;
    for (auto& [b, v] : buckets) {
        for (std::size_t i = 0; i < quota.at(b); ++i) out.push_back(v[i]->comment_id);
    }
    return out;
}

} // namespace detail

/// Round 0 (no classifier): half keyword-seeded, half random, both stratified by
/// week. Later rounds: a spot-check share drawn from confident predictions and
/// the rest by uncertainty sampling. Labelled ids are never returned.
inline RoundPlan plan_active_learning_round(const HopeClassifier* classifier, const std::vector<PoolItem>& pool,
                                            const std::set<std::string>& labeled, const PhraseLexicon& keywords,
                                            const ActiveLearningOptions& options) {
    std::vector<const PoolItem*> open;
    for (const auto& p : pool) {
        if (!labeled.count(p.comment_id)) open.push_back(&p);
    }
    if (open.empty()) throw Error("active learning: pool exhausted (every item already labeled)");
    Rng rng(options.seed);
    RoundPlan plan;

    if (!classifier) {
        std::vector<const PoolItem*> hits, rest;
        for (const auto* p : open) {
            bool hit = false;
            for (std::size_t i = 0; i < p->tokens.size() && !hit; ++i) hit = keywords.longest_at(p->tokens, i).has_value();
            (hit ? hits : rest).push_back(p);
        }
        plan.keyword_seeded = detail::stratified_random(hits, options.batch_size / 2, rng);
        const std::set<std::string> chosen(plan.keyword_seeded.begin(), plan.keyword_seeded.end());
        std::vector<const PoolItem*> remaining;
        for (const auto* p : open) {
            if (!chosen.count(p->comment_id)) remaining.push_back(p);
        }
        plan.random = detail::stratified_random(remaining, options.batch_size - plan.keyword_seeded.size(), rng);
        return plan;
    }

    std::vector<ScoredItem> scored, confident;
    for (const auto* p : open) {
        ScoredItem s{p->comment_id, p->week_bucket, classifier->probability(p->features)};
        if (s.probability > options.confident_high || s.probability < options.confident_low) confident.push_back(s);
        scored.push_back(std::move(s));
    }
    const auto n_spot = std::min(confident.size(), static_cast<std::size_t>(std::llround(
                                                       options.spot_check_fraction * static_cast<double>(options.batch_size))));
    rng.shuffle(confident);
    confident.resize(n_spot);
    std::sort(confident.begin(), confident.end(),
              [](const ScoredItem& a, const ScoredItem& b) { return a.comment_id < b.comment_id; });
    plan.spot_checks = confident;
    std::set<std::string> spot_ids;
    for (const auto& s : confident) spot_ids.insert(s.comment_id);
    std::erase_if(scored, [&](const ScoredItem& s) { return spot_ids.count(s.comment_id) > 0; });
    if (!scored.empty() && options.batch_size > n_spot) {
        plan.uncertain = select_uncertain(std::move(scored), options.batch_size - n_spot);
    }
    return plan;
}

// ---------------------------------------------------------------------------
// In-the-wild run

struct WildCandidate {
    std::string comment_id;
    std::chrono::sys_days day{};
    FeatureVector features;
};

struct WildPositive {
    std::string comment_id;
    double probability = 0.0;
};

struct WildRunResult {
    std::map<std::chrono::sys_days, std::size_t> sampled_per_day;
    std::vector<WildPositive> positives;
    std::vector<std::string> warnings;
};

/// Seeded per-day sample of `per_day_quota` candidates (all of a day when it has
/// fewer, with a warning), scored by the classifier; p >= threshold is positive.
inline WildRunResult wild_run(const HopeClassifier& classifier, const std::vector<WildCandidate>& candidates,
                              std::size_t per_day_quota, std::uint64_t seed) {
    std::map<std::chrono::sys_days, std::vector<const WildCandidate*>> days;
    for (const auto& c : candidates) days[c.day].push_back(&c);
    Rng rng(seed);
    WildRunResult r;
    for (auto& [day, items] : days) {
        if (items.size() < per_day_quota) {
            r.warnings.push_back(format_day(day) + ": only " + std::to_string(items.size()) +
                                 " comments, fewer than the quota of " + std::to_string(per_day_quota));
        }
        rng.shuffle(items);
        if (items.size() > per_day_quota) items.resize(per_day_quota);
        r.sampled_per_day[day] = items.size();
        for (const auto* c : items) {
            const double p = classifier.probability(c->features);
            if (p >= classifier.threshold) r.positives.push_back({c->comment_id, p});
        }
    }
    return r;
}

struct VerifiedLabel {
    bool hope = false;
    std::vector<std::string> criteria;
};

struct WildVerification {
    std::size_t predicted = 0;
    std::size_t verified = 0;      // positives with a human verdict
    std::size_t confirmed = 0;     // verdict = hope
    std::optional<double> precision; // nullopt -> "n/a"
    std::map<std::string, std::size_t> criteria_breakdown;
};

inline WildVerification verify_wild(const std::vector<WildPositive>& positives,
                                    const std::map<std::string, VerifiedLabel>& verdicts) {
    WildVerification v;
    v.predicted = positives.size();
    for (const auto& p : positives) {
        auto it = verdicts.find(p.comment_id);
        if (it == verdicts.end()) continue;
        ++v.verified;
        if (it->second.hope) {
            ++v.confirmed;
            for (const auto& c : it->second.criteria) ++v.criteria_breakdown[c];
        }
    }
    if (v.verified > 0) v.precision = static_cast<double>(v.confirmed) / static_cast<double>(v.verified);
    return v;
}

// ---------------------------------------------------------------------------
// Inter-annotator agreement

/// Cohen's kappa for two label sequences; defined as 1 when chance agreement is 1.
template <typename Label>
double cohen_kappa(const std::vector<Label>& a, const std::vector<Label>& b) {
    if (a.size() != b.size()) throw Error("cohen_kappa: length mismatch");
    require(!a.empty(), "cohen_kappa: empty label sequences");
    const auto n = static_cast<double>(a.size());
    std::map<Label, double> ma, mb;
    double agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma[a[i]] += 1;
        mb[b[i]] += 1;
        if (a[i] == b[i]) agree += 1;
    }
    const double po = agree / n;
    double pe = 0.0;
    for (const auto& [l, c] : ma) {
        auto it = mb.find(l);
        if (it != mb.end()) pe += (c / n) * (it->second / n);
    }
    if (pe >= 1.0) return 1.0;
    return (po - pe) / (1.0 - pe);
}

template <typename Label>
double observed_agreement(const std::vector<Label>& a, const std::vector<Label>& b) {
    if (a.size() != b.size()) throw Error("observed_agreement: length mismatch");
    require(!a.empty(), "observed_agreement: empty label sequences");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i];
    return static_cast<double>(agree) / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// Persistence

inline json to_json(const HopeClassifier& c) {
    return json{{"lambda", c.lambda},
                {"threshold", c.threshold},
                {"bias", c.bias},
                {"feature_vocab", c.vocab.grams()},
                {"weights", c.weights},
                {"embedding_dim", c.embedding_dim},
                {"embedding_model_ref", c.embedding_model_ref},
                {"features", {{"ngrams", c.features.ngrams}, {"intent", c.features.intent}, {"embedding", c.features.embedding}}}};
}

inline HopeClassifier hope_classifier_from_json(const json& j) {
    HopeClassifier c;
    c.lambda = j.at("lambda").get<double>();
    c.threshold = j.at("threshold").get<double>();
    c.bias = j.at("bias").get<double>();
    for (const auto& g : j.at("feature_vocab")) c.vocab.add(g.get<std::string>());
    c.weights = j.at("weights").get<Vector>();
    c.embedding_dim = j.value("embedding_dim", std::size_t{0});
    c.embedding_model_ref = j.value("embedding_model_ref", std::string{});
    if (j.contains("features")) {
        const auto& f = j.at("features");
        c.features = {f.value("ngrams", true), f.value("intent", true), f.value("embedding", true)};
    }
    require(c.weights.size() == c.vocab.size() + 1 + c.embedding_dim, "classifier: weight vector size mismatch");
    return c;
}

inline void save_hope_classifier(const std::string& path, const HopeClassifier& c) {
    auto out = open_output(path);
    out << to_json(c).dump(2) << '\n';
}

inline HopeClassifier load_hope_classifier(const std::string& path) {
    auto in = open_input(path);
    try {
        return hope_classifier_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
}

} // namespace commentlab
