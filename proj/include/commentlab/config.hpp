#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "embed.hpp"
#include "error.hpp"
#include "io.hpp"

namespace commentlab {

struct LangidConfig {
    std::size_t k_min = 2;
    std::size_t k_max = 12;
    std::size_t k = 0; // 0: choose by silhouette
    std::size_t silhouette_sample = 2000;
    std::size_t select_sample = 10000; // documents clustered while choosing k
    std::size_t sample_size = 10;
    std::uint64_t seed = 1;
};

struct IntentConfig {
    int window_days = 3;
    bool remove_stopwords = true;
    std::size_t top_n = 20;
};

struct HopeConfig {
    std::vector<double> lambdas{0.01, 0.1, 1.0, 10.0};
    double lambda = 1.0;
    std::size_t runs = 100;
    std::size_t batch_size = 200;
    std::size_t per_day_quota = 1000;
    std::uint64_t seed = 1;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
};

/// Static run configuration. Paths are keyed by artifact name
/// (comments, videos, lexicon, gazetteer, embed_model, cluster_model,
/// classifier, labeled, store, output_dir, ...).
struct PipelineConfig {
    std::map<std::string, std::string> paths;
    EmbeddingConfig embedding;
    LangidConfig langid;
    IntentConfig intent;
    HopeConfig hope;
    ServiceConfig service;
};

namespace detail {

template <typename T>
void read_field(const json& obj, const char* section, const char* key, T& target) {
    if (!obj.contains(key)) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(std::string("config field '") + section + "." + key + "' has the wrong type");
    }
}

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) line += text[i] == '\n';
    return line;
}

} // namespace detail

inline const std::vector<std::string>& known_config_sections() {
    static const std::vector<std::string> s{"paths", "embedding", "langid", "intent", "hope", "service"};
    return s;
}

inline PipelineConfig parse_config(const std::string& text, const std::string& origin = "config") {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(origin + ":" + std::to_string(detail::line_of_offset(text, e.byte)) + ": " + e.what());
    }
    if (!j.is_object()) throw Error(origin + ": top level must be an object");
    for (const auto& [key, value] : j.items()) {
        const auto& known = known_config_sections();
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error(origin + ": unknown config section '" + key + "'");
        }
        if (!value.is_object()) throw Error(origin + ": config section '" + key + "' must be an object");
    }

    PipelineConfig c;
    const json empty = json::object();
    const json& paths = j.contains("paths") ? j["paths"] : empty;
    for (const auto& [key, value] : paths.items()) {
        if (!value.is_string()) throw Error(origin + ": config field 'paths." + key + "' must be a string");
        c.paths[key] = value.get<std::string>();
    }
    const json& e = j.contains("embedding") ? j["embedding"] : empty;
    detail::read_field(e, "embedding", "dim", c.embedding.dim);
    detail::read_field(e, "embedding", "window", c.embedding.window);
    detail::read_field(e, "embedding", "negatives", c.embedding.negatives);
    detail::read_field(e, "embedding", "epochs", c.embedding.epochs);
    detail::read_field(e, "embedding", "learning_rate", c.embedding.learning_rate);
    detail::read_field(e, "embedding", "min_count", c.embedding.min_count);
    detail::read_field(e, "embedding", "subword_min", c.embedding.subword_min);
    detail::read_field(e, "embedding", "subword_max", c.embedding.subword_max);
    detail::read_field(e, "embedding", "bucket_count", c.embedding.bucket_count);
    detail::read_field(e, "embedding", "seed", c.embedding.seed);
    detail::read_field(e, "embedding", "threads", c.embedding.threads);

    const json& l = j.contains("langid") ? j["langid"] : empty;
    detail::read_field(l, "langid", "k_min", c.langid.k_min);
    detail::read_field(l, "langid", "k_max", c.langid.k_max);
    detail::read_field(l, "langid", "k", c.langid.k);
    detail::read_field(l, "langid", "silhouette_sample", c.langid.silhouette_sample);
    detail::read_field(l, "langid", "select_sample", c.langid.select_sample);
    detail::read_field(l, "langid", "sample_size", c.langid.sample_size);
    detail::read_field(l, "langid", "seed", c.langid.seed);

    const json& i = j.contains("intent") ? j["intent"] : empty;
    detail::read_field(i, "intent", "window_days", c.intent.window_days);
    detail::read_field(i, "intent", "remove_stopwords", c.intent.remove_stopwords);
    detail::read_field(i, "intent", "top_n", c.intent.top_n);

    const json& h = j.contains("hope") ? j["hope"] : empty;
    detail::read_field(h, "hope", "lambdas", c.hope.lambdas);
    detail::read_field(h, "hope", "lambda", c.hope.lambda);
    detail::read_field(h, "hope", "runs", c.hope.runs);
    detail::read_field(h, "hope", "batch_size", c.hope.batch_size);
    detail::read_field(h, "hope", "per_day_quota", c.hope.per_day_quota);
    detail::read_field(h, "hope", "seed", c.hope.seed);

    const json& s = j.contains("service") ? j["service"] : empty;
    detail::read_field(s, "service", "host", c.service.host);
    detail::read_field(s, "service", "port", c.service.port);
    return c;
}

inline PipelineConfig load_config(const std::string& path) {
    auto in = open_input(path);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text, path);
}

} // namespace commentlab
