#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "embed.hpp"
#include "error.hpp"
#include "io.hpp"
#include "random.hpp"

namespace commentlab {

// ---------------------------------------------------------------------------
// Language tags

enum class ScriptVariant { native, romanized };

struct LanguageTag {
    std::string language;
    ScriptVariant script_variant = ScriptVariant::native;

    /// Romanised variants render with an "(E)" suffix, e.g. "hindi (E)".
    std::string display() const {
        return script_variant == ScriptVariant::romanized ? language + " (E)" : language;
    }

    bool operator==(const LanguageTag&) const = default;
};

inline const LanguageTag kUnknownLanguage{"unknown", ScriptVariant::native};

inline ScriptVariant parse_script_variant(const std::string& s) {
    if (s == "native" || s.empty()) return ScriptVariant::native;
    if (s == "romanized" || s == "roman" || s == "E") return ScriptVariant::romanized;
    throw Error("unknown script variant '" + s + "' (expected native|romanized)");
}

inline std::string to_string(ScriptVariant v) { return v == ScriptVariant::romanized ? "romanized" : "native"; }

// ---------------------------------------------------------------------------
// Geometry helpers

inline double squared_distance(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline std::size_t count_distinct(const std::vector<Vector>& points) {
    std::vector<const Vector*> ptrs;
    for (const auto& p : points) ptrs.push_back(&p);
    std::sort(ptrs.begin(), ptrs.end(), [](const Vector* a, const Vector* b) { return *a < *b; });
    return static_cast<std::size_t>(
        std::unique(ptrs.begin(), ptrs.end(), [](const Vector* a, const Vector* b) { return *a == *b; }) -
        ptrs.begin());
}

// ---------------------------------------------------------------------------
// Clustering

struct ClusterAudit {
    std::size_t cluster = 0;
    std::vector<std::string> sample_ids;
    std::vector<std::string> sample_texts;
    std::optional<std::size_t> dominant_count; // annotator-reported, out of the sample size
};

struct ClusterModel {
    std::size_t k = 0;
    std::vector<Vector> centroids;
    std::vector<std::optional<LanguageTag>> labels;
    double inertia = 0.0;
    std::uint64_t seed = 0;
    std::vector<ClusterAudit> audit;

    bool labeled() const {
        return !labels.empty() && std::all_of(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); });
    }

    std::size_t nearest(const Vector& x) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < centroids.size(); ++j) {
            const double d = squared_distance(x, centroids[j]);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        return best;
    }
};

struct KMeansOptions {
    double tolerance = 1e-4; // max centroid shift (Euclidean)
    std::size_t max_iterations = 300;
};

struct KMeansResult {
    ClusterModel model;
    std::vector<std::size_t> assignment;
    std::vector<double> inertia_history; // after each assignment step
    std::size_t iterations = 0;
};

namespace detail {

inline std::vector<Vector> kmeans_plus_plus(const std::vector<Vector>& points, std::size_t k, Rng& rng) {
    std::vector<Vector> centroids;
    centroids.push_back(points[rng.index(points.size())]);
    std::vector<double> d2(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = squared_distance(points[i], centroids[0]);
    while (centroids.size() < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        double target = rng.uniform() * total;
        for (pick = 0; pick + 1 < points.size(); ++pick) {
            if (d2[pick] > 0.0 && target < d2[pick]) break;
            target -= d2[pick];
        }
        // Guard against rounding landing on an existing centroid.
        if (d2[pick] <= 0.0) {
            pick = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
        }
        centroids.push_back(points[pick]);
        for (std::size_t i = 0; i < points.size(); ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
        }
    }
    return centroids;
}

inline double assign(const std::vector<Vector>& points, const ClusterModel& model, std::vector<std::size_t>& out) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        out[i] = model.nearest(points[i]);
        inertia += squared_distance(points[i], model.centroids[out[i]]);
    }
    return inertia;
}

} // namespace detail

/// Lloyd's algorithm from k-means++ seeding. An empty cluster is re-seeded at the
/// point farthest from its current centroid.
inline KMeansResult kmeans(const std::vector<Vector>& points, std::size_t k, std::uint64_t seed,
                           const KMeansOptions& options = {}) {
    require(k >= 2, "kmeans: k must be >= 2");
    require(!points.empty(), "kmeans: no points");
    if (count_distinct(points) < k) throw Error("kmeans: fewer distinct points than k");
    const std::size_t dim = points[0].size();

    Rng rng(seed);
    KMeansResult result;
    auto& model = result.model;
    model.k = k;
    model.seed = seed;
    model.centroids = detail::kmeans_plus_plus(points, k, rng);
    model.labels.assign(k, std::nullopt);
    result.assignment.assign(points.size(), 0);

    double inertia = detail::assign(points, model, result.assignment);
    result.inertia_history.push_back(inertia);
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        std::vector<Vector> sums(k, Vector(dim, 0.0));
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            auto& s = sums[result.assignment[i]];
            for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
            ++sizes[result.assignment[i]];
        }
        double max_shift = 0.0;
        std::vector<bool> taken(points.size(), false);
        for (std::size_t j = 0; j < k; ++j) {
            Vector next(dim);
            if (sizes[j] > 0) {
                for (std::size_t d = 0; d < dim; ++d) next[d] = sums[j][d] / static_cast<double>(sizes[j]);
            } else {
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    if (taken[i]) continue;
                    const double d = squared_distance(points[i], model.centroids[result.assignment[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                taken[far] = true;
                next = points[far];
            }
            max_shift = std::max(max_shift, std::sqrt(squared_distance(next, model.centroids[j])));
            model.centroids[j] = std::move(next);
        }
        inertia = detail::assign(points, model, result.assignment);
        result.inertia_history.push_back(inertia);
        result.iterations = iter + 1;
        if (max_shift < options.tolerance) break;
    }
    model.inertia = inertia;
    return result;
}

/// Mean silhouette coefficient from a precomputed distance matrix. Points in
/// singleton clusters score 0.
inline double mean_silhouette(const std::vector<std::vector<double>>& dist, const std::vector<std::size_t>& labels,
                              std::size_t k) {
    const std::size_t n = labels.size();
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes[l];
    double total = 0.0;
    std::vector<double> sum(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) sum[labels[j]] += dist[i][j];
        const std::size_t own = labels[i];
        if (sizes[own] <= 1) continue;
        const double a = sum[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own && sizes[c] > 0) b = std::min(b, sum[c] / static_cast<double>(sizes[c]));
        }
        if (!std::isfinite(b)) continue;
        const double m = std::max(a, b);
        total += m > 0.0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

inline std::vector<std::vector<double>> distance_matrix(const std::vector<Vector>& points) {
    const std::size_t n = points.size();
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            dist[i][j] = dist[j][i] = std::sqrt(squared_distance(points[i], points[j]));
        }
    }
    return dist;
}

struct SelectKOptions {
    std::size_t k_min = 2;
    std::size_t k_max = 12;
    std::size_t silhouette_sample = 2000;
    std::uint64_t seed = 1;
};

struct SelectKResult {
    std::size_t k = 0;
    std::map<std::size_t, double> silhouette; // only k values that could be clustered
};

/// Clusters the sample for every k in range and returns the k with the highest
/// mean silhouette on an independent seeded subsample. Ties go to the smaller k;
/// k values exceeding the number of distinct points are skipped.
inline SelectKResult select_k(const std::vector<Vector>& sample, const SelectKOptions& options) {
    require(options.k_min >= 2 && options.k_min <= options.k_max, "select_k: need 2 <= k_min <= k_max");
    if (sample.size() < options.k_max + 1) throw Error("select_k: sample too small");
    const std::size_t distinct = count_distinct(sample);
    if (distinct < 2) throw Error("degenerate sample");

    std::vector<std::size_t> subset(sample.size());
    std::iota(subset.begin(), subset.end(), std::size_t{0});
    if (subset.size() > options.silhouette_sample) {
        Rng rng(options.seed ^ 0x5111ull);
        rng.shuffle(subset);
        subset.resize(options.silhouette_sample);
        std::sort(subset.begin(), subset.end());
    }
    std::vector<Vector> sub;
    for (auto i : subset) sub.push_back(sample[i]);
    const auto dist = distance_matrix(sub);

    SelectKResult result;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = options.k_min; k <= options.k_max; ++k) {
        if (k > distinct) break;
        const auto fit = kmeans(sample, k, options.seed);
        std::vector<std::size_t> labels;
        for (auto i : subset) labels.push_back(fit.assignment[i]);
        const double s = mean_silhouette(dist, labels, k);
        result.silhouette[k] = s;
        if (s > best) {
            best = s;
            result.k = k;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Cluster labelling

/// Seeded uniform sample (without replacement) of up to `sample_size` member
/// documents per cluster. Empty documents are never sampled.
inline std::vector<ClusterAudit> draw_cluster_samples(const ClusterModel& model, const std::vector<DocEmbedding>& docs,
                                                      std::size_t sample_size, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> members(model.k);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!docs[i].empty) members[model.nearest(docs[i].vector)].push_back(i);
    }
    Rng rng(seed);
    std::vector<ClusterAudit> audit;
    for (std::size_t c = 0; c < model.k; ++c) {
        auto& m = members[c];
        rng.shuffle(m);
        if (m.size() > sample_size) m.resize(sample_size);
        ClusterAudit a;
        a.cluster = c;
        for (auto i : m) a.sample_ids.push_back(docs[i].comment_id);
        audit.push_back(std::move(a));
    }
    return audit;
}

struct ClusterLabel {
    LanguageTag tag;
    std::optional<std::size_t> dominant_count;
};

/// Reads "cluster_index<TAB>language<TAB>script_variant[<TAB>dominant_count]".
inline std::map<std::size_t, ClusterLabel> load_cluster_labels(const std::string& path) {
    std::map<std::size_t, ClusterLabel> labels;
    for (const auto& row : read_tsv(path)) {
        if (row.size() < 2) throw Error(path + ": expected cluster_index<TAB>language<TAB>script_variant");
        ClusterLabel l;
        const auto idx = static_cast<std::size_t>(std::stoul(row[0]));
        l.tag.language = row[1];
        l.tag.script_variant = parse_script_variant(row.size() > 2 ? row[2] : "");
        if (row.size() > 3 && !row[3].empty()) l.dominant_count = static_cast<std::size_t>(std::stoul(row[3]));
        labels[idx] = l;
    }
    return labels;
}

inline ClusterModel label_clusters(ClusterModel model, const std::map<std::size_t, ClusterLabel>& labels) {
    model.labels.assign(model.k, std::nullopt);
    for (std::size_t c = 0; c < model.k; ++c) {
        auto it = labels.find(c);
        if (it == labels.end()) throw Error("unlabeled cluster " + std::to_string(c));
        model.labels[c] = it->second.tag;
        if (it->second.dominant_count) {
            for (auto& a : model.audit) {
                if (a.cluster == c) a.dominant_count = it->second.dominant_count;
            }
        }
    }
    return model;
}

inline LanguageTag classify(const ClusterModel& model, const DocEmbedding& doc) {
    if (!model.labeled()) throw Error("classify: cluster model is not labeled");
    if (doc.empty) return kUnknownLanguage;
    return *model.labels[model.nearest(doc.vector)];
}

// ---------------------------------------------------------------------------
// Evaluation

struct LanguageMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double support_share = 0.0;
    std::size_t support = 0;
};

struct EvalReport {
    double accuracy = 0.0;
    std::size_t total = 0;
    std::map<std::string, LanguageMetrics> per_language;
};

inline double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline EvalReport evaluate(const std::vector<std::string>& predictions, const std::vector<std::string>& gold) {
    if (predictions.size() != gold.size()) throw Error("evaluate: length mismatch");
    require(!gold.empty(), "evaluate: empty input");
    std::map<std::string, std::size_t> tp, pred_n, gold_n;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        ++pred_n[predictions[i]];
        ++gold_n[gold[i]];
        if (predictions[i] == gold[i]) {
            ++tp[gold[i]];
            ++correct;
        }
    }
    EvalReport r;
    r.total = gold.size();
    r.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
    std::set<std::string> langs;
    for (auto& [l, n] : pred_n) langs.insert(l);
    for (auto& [l, n] : gold_n) langs.insert(l);
    for (const auto& l : langs) {
        LanguageMetrics m;
        const double t = static_cast<double>(tp[l]);
        m.support = gold_n[l];
        m.precision = pred_n[l] ? t / static_cast<double>(pred_n[l]) : 0.0;
        m.recall = gold_n[l] ? t / static_cast<double>(gold_n[l]) : 0.0;
        m.f1 = f1_score(m.precision, m.recall);
        m.support_share = static_cast<double>(gold_n[l]) / static_cast<double>(gold.size());
        r.per_language[l] = m;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Restricting an external ranked predictor to the corpus languages

struct RankedLanguage {
    std::string language;
    double confidence = 0.0;
};

/// Highest-confidence prediction whose language occurs in the corpus;
/// "unknown" when none does.
inline std::string fair_restrict(const std::vector<RankedLanguage>& ranked, const std::set<std::string>& corpus_languages) {
    if (ranked.empty()) throw Error("fair_restrict: empty prediction list");
    const RankedLanguage* best = nullptr;
    for (const auto& r : ranked) {
        if (!corpus_languages.count(r.language)) continue;
        if (!best || r.confidence > best->confidence) best = &r;
    }
    return best ? best->language : kUnknownLanguage.language;
}

// ---------------------------------------------------------------------------
// Persistence

inline json to_json(const ClusterModel& m) {
    json j;
    j["k"] = m.k;
    j["seed"] = m.seed;
    j["inertia"] = m.inertia;
    j["centroids"] = m.centroids;
    json labels = json::array();
    for (const auto& l : m.labels) {
        if (l) {
            labels.push_back({{"language", l->language}, {"script_variant", to_string(l->script_variant)}});
        } else {
            labels.push_back(nullptr);
        }
    }
    j["labels"] = labels;
    json audit = json::array();
    for (const auto& a : m.audit) {
        json e{{"cluster", a.cluster}, {"sample_ids", a.sample_ids}, {"sample_texts", a.sample_texts}};
        e["dominant_count"] = a.dominant_count ? json(*a.dominant_count) : json(nullptr);
        audit.push_back(e);
    }
    j["audit"] = audit;
    return j;
}

inline ClusterModel cluster_model_from_json(const json& j) {
    ClusterModel m;
    m.k = j.at("k").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.inertia = j.at("inertia").get<double>();
    m.centroids = j.at("centroids").get<std::vector<Vector>>();
    require(m.centroids.size() == m.k, "cluster model: centroid count does not match k");
    for (const auto& l : j.at("labels")) {
        if (l.is_null()) {
            m.labels.push_back(std::nullopt);
        } else {
            m.labels.push_back(LanguageTag{l.at("language").get<std::string>(),
                                           parse_script_variant(l.at("script_variant").get<std::string>())});
        }
    }
    if (m.labels.empty()) m.labels.assign(m.k, std::nullopt);
    require(m.labels.size() == m.k, "cluster model: label count does not match k");
    if (j.contains("audit")) {
        for (const auto& e : j.at("audit")) {
            ClusterAudit a;
            a.cluster = e.at("cluster").get<std::size_t>();
            a.sample_ids = e.at("sample_ids").get<std::vector<std::string>>();
            if (e.contains("sample_texts")) a.sample_texts = e.at("sample_texts").get<std::vector<std::string>>();
            if (e.contains("dominant_count") && !e.at("dominant_count").is_null()) {
                a.dominant_count = e.at("dominant_count").get<std::size_t>();
            }
            m.audit.push_back(std::move(a));
        }
    }
    return m;
}

inline void save_cluster_model(const std::string& path, const ClusterModel& m) {
    auto out = open_output(path);
    out << to_json(m).dump(2) << '\n';
}

inline ClusterModel load_cluster_model(const std::string& path) {
    auto in = open_input(path);
    try {
        return cluster_model_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
}

struct ExternalPrediction {
    std::string comment_id;
    std::vector<RankedLanguage> ranked;
};

/// Each line is either a bare array of {language, confidence} or an object
/// {"comment_id": ..., "ranked": [...]}.
inline std::vector<ExternalPrediction> load_external_predictions(const std::string& path) {
    std::vector<ExternalPrediction> out;
    for_each_jsonl(path, [&](const json& j, std::size_t lineno) {
        ExternalPrediction p;
        const json* list = &j;
        if (j.is_object()) {
            p.comment_id = j.value("comment_id", std::string{});
            list = &j.at("ranked");
        } else {
            p.comment_id = std::to_string(lineno);
        }
        for (const auto& e : *list) {
            p.ranked.push_back({e.at("language").get<std::string>(), e.at("confidence").get<double>()});
        }
        out.push_back(std::move(p));
    });
    return out;
}

} // namespace commentlab
