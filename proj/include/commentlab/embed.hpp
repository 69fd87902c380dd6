#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "io.hpp"
#include "random.hpp"
#include "text.hpp"

namespace commentlab {

using Vector = std::vector<double>;

struct EmbeddingConfig {
    std::uint32_t dim = 100;
    std::uint32_t window = 5;
    std::uint32_t negatives = 5;
    std::uint32_t epochs = 5;
    double learning_rate = 0.05;
    std::uint32_t min_count = 5;
    std::uint32_t subword_min = 3;
    std::uint32_t subword_max = 6;
    std::uint64_t bucket_count = 2'000'000;
    std::uint64_t seed = 1;
    std::uint32_t threads = 1; // not persisted; results are deterministic only with 1

    void validate() const {
        require(dim >= 1, "embedding dim must be >= 1");
        require(window >= 1, "embedding window must be >= 1");
        require(subword_min >= 1 && subword_min <= subword_max, "need 1 <= subword_min <= subword_max");
        require(bucket_count >= 1, "bucket_count must be >= 1");
        require(learning_rate > 0.0, "learning_rate must be positive");
        require(threads >= 1, "threads must be >= 1");
    }
};

/// Dense row-major float matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

/// 32-bit FNV-1a over the UTF-8 bytes.
inline std::uint32_t fnv1a(std::string_view s) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : s) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

/// Character n-grams of "<token>" with lengths in [min_n, max_n] code points,
/// hashed into [0, bucket_count). Lone boundary markers are not emitted.
inline std::vector<std::uint64_t> subword_buckets(std::string_view token, std::uint32_t min_n, std::uint32_t max_n,
                                                  std::uint64_t bucket_count) {
    const std::string wrapped = "<" + std::string(token) + ">";
    const auto chars = utf8_chars(wrapped);
    std::vector<std::uint64_t> out;
    for (std::size_t start = 0; start < chars.size(); ++start) {
        std::string gram;
        for (std::size_t n = 1; n <= max_n && start + n <= chars.size(); ++n) {
            gram.append(chars[start + n - 1]);
            if (n < min_n) continue;
            if (n == 1 && (start == 0 || start + 1 == chars.size())) continue;
            out.push_back(fnv1a(gram) % bucket_count);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Negative-sampling objective for one (input, target) pair.
//
//   loss = -log s(h.u_pos) - sum_k log s(-h.u_neg_k)

template <typename Real>
Real sigmoid(Real x) {
    if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
    const Real e = std::exp(x);
    return e / (Real(1) + e);
}

template <typename Real>
Real log_sigmoid(Real x) {
    return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <typename Real>
Real dot(std::span<const Real> a, std::span<const Real> b) {
    Real s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

template <typename Real>
Real ns_loss(std::span<const Real> hidden, std::span<const Real> positive,
             const std::vector<std::span<const Real>>& negatives) {
    Real loss = -log_sigmoid(dot(hidden, positive));
    for (const auto& n : negatives) loss -= log_sigmoid(-dot(hidden, n));
    return loss;
}

/// Returns the loss and writes d(loss)/d(hidden), d/d(positive), d/d(negative_k).
template <typename Real>
Real ns_loss_gradient(std::span<const Real> hidden, std::span<const Real> positive,
                      const std::vector<std::span<const Real>>& negatives, std::span<Real> grad_hidden,
                      std::span<Real> grad_positive, std::vector<std::vector<Real>>& grad_negatives) {
    std::fill(grad_hidden.begin(), grad_hidden.end(), Real(0));
    const Real sp = dot(hidden, positive);
    Real loss = -log_sigmoid(sp);
    const Real gp = sigmoid(sp) - Real(1);
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        grad_hidden[i] += gp * positive[i];
        grad_positive[i] = gp * hidden[i];
    }
    grad_negatives.assign(negatives.size(), std::vector<Real>(hidden.size()));
    for (std::size_t k = 0; k < negatives.size(); ++k) {
        const Real sn = dot(hidden, negatives[k]);
        loss -= log_sigmoid(-sn);
        const Real gn = sigmoid(sn);
        for (std::size_t i = 0; i < hidden.size(); ++i) {
            grad_hidden[i] += gn * negatives[k][i];
            grad_negatives[k][i] = gn * hidden[i];
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------

struct DocEmbedding {
    std::string comment_id;
    Vector vector;
    bool empty = true;
};

struct TrainingStats {
    std::vector<double> epoch_loss; // mean loss per (center, context) pair
    std::uint64_t pairs = 0;
};

class EmbeddingModel {
public:
    EmbeddingModel() = default;

    const EmbeddingConfig& config() const { return config_; }
    std::size_t dim() const { return config_.dim; }
    std::size_t vocab_size() const { return words_.size(); }
    const std::vector<std::string>& words() const { return words_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }

    std::optional<std::size_t> find(std::string_view token) const {
        auto it = index_.find(std::string(token));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// Input-matrix rows that compose a token: its own row when in vocabulary,
    /// followed by its subword bucket rows.
    std::vector<std::size_t> input_rows(std::string_view token) const {
        std::vector<std::size_t> rows;
        if (auto idx = find(token)) rows.push_back(*idx);
        for (auto b : subword_buckets(token, config_.subword_min, config_.subword_max, config_.bucket_count)) {
            rows.push_back(words_.size() + b);
        }
        return rows;
    }

    Vector word_vector(std::string_view token) const {
        require(!token.empty(), "word_vector: empty token");
        Vector v(dim(), 0.0);
        for (auto r : input_rows(token)) {
            const auto row = input_.row(r);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += row[i];
        }
        return v;
    }

    /// Mean of unit-normalised token vectors; zero-norm tokens are skipped.
    DocEmbedding doc_embedding(const Tokens& tokens, std::string comment_id = {}) const {
        DocEmbedding doc{std::move(comment_id), Vector(dim(), 0.0), true};
        std::size_t used = 0;
        for (const auto& t : tokens) {
            if (t.empty()) continue;
            const Vector v = word_vector(t);
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (!(norm > 0.0) || !std::isfinite(norm)) continue;
            for (std::size_t i = 0; i < v.size(); ++i) doc.vector[i] += v[i] / norm;
            ++used;
        }
        if (used == 0) return doc;
        for (double& x : doc.vector) x /= static_cast<double>(used);
        doc.empty = false;
        return doc;
    }

    const Matrix& input_matrix() const { return input_; }
    Matrix& input_matrix() { return input_; }
    const Matrix& output_matrix() const { return output_; }
    Matrix& output_matrix() { return output_; }
    bool has_output() const { return !output_.empty(); }

    /// Loss of one training example given explicit rows (test hook for gradient checks).
    double example_loss(const std::vector<std::size_t>& rows, std::size_t target,
                        const std::vector<std::size_t>& negatives) const {
        const Vector h = hidden(rows);
        const Vector pos = as_double(output_.row(target));
        std::vector<Vector> negs;
        for (auto n : negatives) negs.push_back(as_double(output_.row(n)));
        std::vector<std::span<const double>> neg_spans(negs.begin(), negs.end());
        return ns_loss<double>(h, pos, neg_spans);
    }

    /// Mean negative-sampling loss over all (center, context) pairs within the
    /// configured window; negatives are drawn from `seed`.
    double mean_loss(const std::vector<Tokens>& docs, std::uint64_t seed) const {
        require(has_output(), "mean_loss requires output vectors (training-time model)");
        Rng rng(seed);
        double total = 0.0;
        std::uint64_t pairs = 0;
        for (const auto& doc : docs) {
            const auto ids = vocab_ids(doc);
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const auto& rows = word_rows_[ids[i]];
                const std::size_t lo = i >= config_.window ? i - config_.window : 0;
                const std::size_t hi = std::min(ids.size(), i + config_.window + 1);
                for (std::size_t c = lo; c < hi; ++c) {
                    if (c == i) continue;
                    std::vector<std::size_t> negs;
                    for (std::uint32_t k = 0; k < config_.negatives; ++k) negs.push_back(sample_negative(rng, ids[c]));
                    total += example_loss(rows, ids[c], negs);
                    ++pairs;
                }
            }
        }
        require(pairs > 0, "mean_loss: no training pairs in held-out data");
        return total / static_cast<double>(pairs);
    }

    void discard_output() { output_ = Matrix(); }

    // -- construction and training ------------------------------------------

    /// Builds the vocabulary and random initial parameters. Vocabulary order is
    /// descending count, ties lexicographic.
    static EmbeddingModel initialize(const std::vector<Tokens>& corpus, const EmbeddingConfig& config) {
        config.validate();
        std::unordered_map<std::string, std::uint64_t> freq;
        for (const auto& doc : corpus) {
            for (const auto& t : doc) ++freq[t];
        }
        std::vector<std::pair<std::string, std::uint64_t>> kept;
        for (auto& [w, n] : freq) {
            if (n >= config.min_count) kept.emplace_back(w, n);
        }
        if (kept.empty()) throw Error("corpus below min_count threshold");
        std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });

        EmbeddingModel m;
        m.config_ = config;
        for (auto& [w, n] : kept) {
            m.index_.emplace(w, m.words_.size());
            m.words_.push_back(w);
            m.counts_.push_back(n);
        }
        m.input_ = Matrix(m.words_.size() + config.bucket_count, config.dim);
        m.output_ = Matrix(m.words_.size(), config.dim);
        Rng rng(config.seed);
        const double bound = 1.0 / static_cast<double>(config.dim);
        for (float& x : m.input_.data()) x = static_cast<float>(rng.uniform(-bound, bound));
        m.prepare();
        return m;
    }

    TrainingStats train(const std::vector<Tokens>& corpus) {
        require(has_output(), "model has no output vectors; cannot continue training a loaded model");
        std::vector<std::vector<std::size_t>> sequences;
        std::uint64_t total_tokens = 0;
        for (const auto& doc : corpus) {
            auto ids = vocab_ids(doc);
            total_tokens += ids.size();
            if (ids.size() >= 2) sequences.push_back(std::move(ids));
        }
        TrainingStats stats;
        const std::uint64_t budget = std::max<std::uint64_t>(1, total_tokens * config_.epochs);
        std::atomic<std::uint64_t> processed{0};
        const std::uint32_t workers = config_.threads;

        for (std::uint32_t epoch = 0; epoch < config_.epochs; ++epoch) {
            std::vector<double> loss(workers, 0.0);
            std::vector<std::uint64_t> pairs(workers, 0);
            auto work = [&](std::uint32_t worker, auto racy) {
                Rng rng(config_.seed + 0x9E3779B97F4A7C15ull * (epoch + 1) + worker);
                Scratch scratch(config_.dim);
                for (std::size_t s = worker; s < sequences.size(); s += workers) {
                    const auto& ids = sequences[s];
                    for (std::size_t i = 0; i < ids.size(); ++i) {
                        const double progress =
                            static_cast<double>(processed.fetch_add(1, std::memory_order_relaxed)) /
                            static_cast<double>(budget);
                        const double lr = config_.learning_rate * std::max(0.0, 1.0 - progress);
                        const auto b = static_cast<std::size_t>(rng.between(1, config_.window));
                        const std::size_t lo = i >= b ? i - b : 0;
                        const std::size_t hi = std::min(ids.size(), i + b + 1);
                        for (std::size_t c = lo; c < hi; ++c) {
                            if (c == i) continue;
                            loss[worker] += update<decltype(racy)::value>(ids[i], ids[c], lr, rng, scratch);
                            ++pairs[worker];
                        }
                    }
                }
            };
            if (workers == 1) {
                work(0, std::false_type{});
            } else {
                std::vector<std::thread> pool;
                for (std::uint32_t w = 0; w < workers; ++w) pool.emplace_back(work, w, std::true_type{});
                for (auto& t : pool) t.join();
            }
            const double l = std::accumulate(loss.begin(), loss.end(), 0.0);
            const auto p = std::accumulate(pairs.begin(), pairs.end(), std::uint64_t{0});
            stats.epoch_loss.push_back(p ? l / static_cast<double>(p) : 0.0);
            stats.pairs += p;
        }
        return stats;
    }

    // -- persistence -----------------------------------------------------------

    static constexpr char kMagic[8] = {'C', 'L', 'E', 'M', 'B', 'E', 'D', '\0'};
    static constexpr std::uint32_t kVersion = 1;

    /// Binary layout (little-endian): magic, version, config, vocabulary
    /// (length-prefixed tokens with counts), then (vocab + buckets) x dim float32
    /// input rows. Output vectors are not persisted.
    void save(const std::string& path) const {
        auto out = open_output(path);
        out.write(kMagic, sizeof kMagic);
        put<std::uint32_t>(out, kVersion);
        put<std::uint32_t>(out, config_.dim);
        put<std::uint32_t>(out, config_.window);
        put<std::uint32_t>(out, config_.negatives);
        put<std::uint32_t>(out, config_.epochs);
        put<double>(out, config_.learning_rate);
        put<std::uint32_t>(out, config_.min_count);
        put<std::uint32_t>(out, config_.subword_min);
        put<std::uint32_t>(out, config_.subword_max);
        put<std::uint64_t>(out, config_.bucket_count);
        put<std::uint64_t>(out, config_.seed);
        put<std::uint64_t>(out, words_.size());
        for (std::size_t i = 0; i < words_.size(); ++i) {
            put<std::uint32_t>(out, static_cast<std::uint32_t>(words_[i].size()));
            out.write(words_[i].data(), static_cast<std::streamsize>(words_[i].size()));
            put<std::uint64_t>(out, counts_[i]);
        }
        out.write(reinterpret_cast<const char*>(input_.data().data()),
                  static_cast<std::streamsize>(input_.data().size() * sizeof(float)));
        if (!out) throw Error("failed writing embedding model: " + path);
    }

    static EmbeddingModel load(const std::string& path) {
        auto in = open_input(path);
        char magic[8];
        in.read(magic, sizeof magic);
        if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw Error("not an embedding model file: " + path);
        if (get<std::uint32_t>(in) != kVersion) throw Error("unsupported embedding model version: " + path);
        EmbeddingModel m;
        auto& c = m.config_;
        c.dim = get<std::uint32_t>(in);
        c.window = get<std::uint32_t>(in);
        c.negatives = get<std::uint32_t>(in);
        c.epochs = get<std::uint32_t>(in);
        c.learning_rate = get<double>(in);
        c.min_count = get<std::uint32_t>(in);
        c.subword_min = get<std::uint32_t>(in);
        c.subword_max = get<std::uint32_t>(in);
        c.bucket_count = get<std::uint64_t>(in);
        c.seed = get<std::uint64_t>(in);
        c.validate();
        const auto n = get<std::uint64_t>(in);
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto len = get<std::uint32_t>(in);
            std::string w(len, '\0');
            in.read(w.data(), len);
            m.index_.emplace(w, m.words_.size());
            m.words_.push_back(std::move(w));
            m.counts_.push_back(get<std::uint64_t>(in));
        }
        m.input_ = Matrix(m.words_.size() + c.bucket_count, c.dim);
        in.read(reinterpret_cast<char*>(m.input_.data().data()),
                static_cast<std::streamsize>(m.input_.data().size() * sizeof(float)));
        if (!in) throw Error("truncated embedding model file: " + path);
        m.prepare();
        return m;
    }

    /// Plain-text "token v1 v2 ..." export of composed vocabulary vectors,
    /// preceded by a "<count> <dim>" header line.
    void export_text(const std::string& path) const {
        auto out = open_output(path);
        out << words_.size() << ' ' << dim() << '\n';
        char buf[32];
        for (const auto& w : words_) {
            out << w;
            for (double x : word_vector(w)) {
                std::snprintf(buf, sizeof buf, " %.6g", x);
                out << buf;
            }
            out << '\n';
        }
    }

private:
    struct Scratch {
        explicit Scratch(std::size_t dim) : hidden(dim), grad(dim) {}
        std::vector<float> hidden;
        std::vector<float> grad;
    };

    template <typename T>
    static void put(std::ostream& out, T value) {
        out.write(reinterpret_cast<const char*>(&value), sizeof value);
    }

    template <typename T>
    static T get(std::istream& in) {
        T value{};
        in.read(reinterpret_cast<char*>(&value), sizeof value);
        if (!in) throw Error("truncated embedding model file");
        return value;
    }

    static Vector as_double(std::span<const float> row) { return Vector(row.begin(), row.end()); }

    Vector hidden(const std::vector<std::size_t>& rows) const {
        Vector h(dim(), 0.0);
        for (auto r : rows) {
            const auto row = input_.row(r);
            for (std::size_t i = 0; i < h.size(); ++i) h[i] += row[i];
        }
        return h;
    }

    std::vector<std::size_t> vocab_ids(const Tokens& doc) const {
        std::vector<std::size_t> ids;
        for (const auto& t : doc) {
            if (auto idx = find(t)) ids.push_back(*idx);
        }
        return ids;
    }

    void prepare() {
        word_rows_.clear();
        word_rows_.reserve(words_.size());
        for (const auto& w : words_) word_rows_.push_back(input_rows(w));
        // Noise distribution: unigram counts raised to 0.75.
        noise_cdf_.assign(words_.size(), 0.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < words_.size(); ++i) {
            acc += std::pow(static_cast<double>(counts_[i]), 0.75);
            noise_cdf_[i] = acc;
        }
        for (double& x : noise_cdf_) x /= acc;
    }

    std::size_t draw_noise(Rng& rng) const {
        const double u = rng.uniform();
        const auto it = std::upper_bound(noise_cdf_.begin(), noise_cdf_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - noise_cdf_.begin()), words_.size() - 1);
    }

    std::size_t sample_negative(Rng& rng, std::size_t target) const {
        if (words_.size() == 1) return target;
        std::size_t n;
        do {
            n = draw_noise(rng);
        } while (n == target);
        return n;
    }

    template <bool Racy>
    static float load(const float& x) {
        if constexpr (Racy) {
            return std::atomic_ref<float>(const_cast<float&>(x)).load(std::memory_order_relaxed);
        } else {
            return x;
        }
    }

    template <bool Racy>
    static void store(float& x, float v) {
        if constexpr (Racy) {
            std::atomic_ref<float>(x).store(v, std::memory_order_relaxed);
        } else {
            x = v;
        }
    }

    // One SGD step on (center, context) with sampled negatives. The hidden
    // vector is the sum of the center's rows; the input step for each row is
    // the hidden gradient divided by the row count, so the composed vector
    // moves by lr * grad regardless of how many subwords a token has.
    template <bool Racy>
    double update(std::size_t center, std::size_t context, double lr, Rng& rng, Scratch& s) {
        const auto& rows = word_rows_[center];
        const std::size_t d = dim();
        std::fill(s.hidden.begin(), s.hidden.end(), 0.0f);
        for (auto r : rows) {
            const auto row = input_.row(r);
            for (std::size_t i = 0; i < d; ++i) s.hidden[i] += load<Racy>(row[i]);
        }
        std::fill(s.grad.begin(), s.grad.end(), 0.0f);
        double loss = 0.0;
        auto binary = [&](std::size_t target, bool positive) {
            auto out = output_.row(target);
            float score = 0.0f;
            for (std::size_t i = 0; i < d; ++i) score += s.hidden[i] * load<Racy>(out[i]);
            loss -= positive ? log_sigmoid<double>(score) : log_sigmoid<double>(-score);
            const float g = sigmoid(score) - (positive ? 1.0f : 0.0f);
            const auto step = static_cast<float>(lr) * g;
            for (std::size_t i = 0; i < d; ++i) {
                const float o = load<Racy>(out[i]);
                s.grad[i] += g * o;
                store<Racy>(out[i], o - step * s.hidden[i]);
            }
        };
        binary(context, true);
        for (std::uint32_t k = 0; k < config_.negatives; ++k) binary(sample_negative(rng, context), false);

        const float scale = static_cast<float>(lr) / static_cast<float>(rows.size());
        for (auto r : rows) {
            auto row = input_.row(r);
            for (std::size_t i = 0; i < d; ++i) store<Racy>(row[i], load<Racy>(row[i]) - scale * s.grad[i]);
        }
        return loss;
    }

    EmbeddingConfig config_;
    std::vector<std::string> words_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, std::size_t> index_;
    Matrix input_;
    Matrix output_;
    std::vector<std::vector<std::size_t>> word_rows_;
    std::vector<double> noise_cdf_;
};

/// Initialises and trains a model; output vectors are kept for evaluation and
/// dropped by `discard_output()` or on save.
inline EmbeddingModel train_embeddings(const std::vector<Tokens>& corpus, const EmbeddingConfig& config,
                                       TrainingStats* stats = nullptr) {
    auto model = EmbeddingModel::initialize(corpus, config);
    auto s = model.train(corpus);
    if (stats) *stats = std::move(s);
    return model;
}

} // namespace commentlab
