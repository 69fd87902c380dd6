#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "error.hpp"
#include "guideline.hpp"
#include "hope.hpp"
#include "io.hpp"
#include "langid.hpp"

namespace commentlab {

enum class TaskKind { cluster_label, hope_label, relevance_label, wild_verify };

inline TaskKind parse_task_kind(const std::string& s) {
    if (s == "cluster_label") return TaskKind::cluster_label;
    if (s == "hope_label") return TaskKind::hope_label;
    if (s == "relevance_label") return TaskKind::relevance_label;
    if (s == "wild_verify") return TaskKind::wild_verify;
    throw Error("unknown task kind '" + s + "'");
}

inline std::string to_string(TaskKind k) {
    switch (k) {
    case TaskKind::cluster_label: return "cluster_label";
    case TaskKind::hope_label: return "hope_label";
    case TaskKind::relevance_label: return "relevance_label";
    default: return "wild_verify";
    }
}

struct SubmittedLabel {
    std::string annotator;
    std::string label;
    std::vector<std::string> criteria;
};

struct AnnotationTask {
    std::string task_id;
    TaskKind kind = TaskKind::hope_label;
    std::string batch;
    json payload;
    std::vector<std::string> annotators; // empty: any two annotators
    std::vector<SubmittedLabel> labels;  // submission order
    std::optional<std::string> resolution;

    std::size_t required_labels() const { return annotators.empty() ? 2 : annotators.size(); }
    bool complete() const { return labels.size() >= required_labels(); }

    bool labeled_by(const std::string& annotator) const {
        return std::any_of(labels.begin(), labels.end(), [&](const auto& l) { return l.annotator == annotator; });
    }

    bool agreed() const {
        return complete() && std::all_of(labels.begin(), labels.end(),
                                         [&](const auto& l) { return l.label == labels.front().label; });
    }

    /// Resolved label if any, otherwise the unanimous label of a complete task.
    std::optional<std::string> consensus() const {
        if (resolution) return resolution;
        if (agreed()) return labels.front().label;
        return std::nullopt;
    }

    std::string status() const {
        if (resolution) return "resolved";
        if (complete()) return "complete";
        return labels.empty() ? "open" : "in_progress";
    }
};

struct Agreement {
    std::size_t tasks = 0;
    std::optional<double> observed;
    std::optional<double> kappa;
    std::vector<std::string> disagreements;
};

/// Append-only label store backed by a directory: tasks.jsonl holds task
/// definitions, events.jsonl holds label submissions and resolutions. State is
/// rebuilt by replaying both files; raw submissions are never rewritten.
class AnnotationStore {
public:
    explicit AnnotationStore(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
        replay();
    }

    const std::filesystem::path& directory() const { return dir_; }

    std::string add_task(TaskKind kind, const std::string& batch, json payload,
                         std::vector<std::string> annotators = {}, std::optional<std::string> task_id = {}) {
        std::lock_guard lock(mutex_);
        AnnotationTask t;
        t.task_id = task_id ? *task_id : "t" + std::to_string(order_.size() + 1);
        if (tasks_.count(t.task_id)) throw Error("duplicate task id " + t.task_id);
        t.kind = kind;
        t.batch = batch;
        t.payload = std::move(payload);
        t.annotators = std::move(annotators);
        append("tasks.jsonl", json{{"task_id", t.task_id},
                                   {"kind", to_string(t.kind)},
                                   {"batch", t.batch},
                                   {"payload", t.payload},
                                   {"annotators", t.annotators}});
        order_.push_back(t.task_id);
        tasks_[t.task_id] = std::move(t);
        return order_.back();
    }

    std::optional<AnnotationTask> next_task(const std::string& annotator, std::optional<TaskKind> kind) const {
        std::lock_guard lock(mutex_);
        for (const auto& id : order_) {
            const auto& t = tasks_.at(id);
            if (kind && t.kind != *kind) continue;
            if (t.complete() || t.resolution || t.labeled_by(annotator)) continue;
            if (!t.annotators.empty() &&
                std::find(t.annotators.begin(), t.annotators.end(), annotator) == t.annotators.end()) {
                continue;
            }
            return t;
        }
        return std::nullopt;
    }

    std::optional<AnnotationTask> task(const std::string& id) const {
        std::lock_guard lock(mutex_);
        auto it = tasks_.find(id);
        if (it == tasks_.end()) return std::nullopt;
        return it->second;
    }

    std::vector<AnnotationTask> tasks() const {
        std::lock_guard lock(mutex_);
        std::vector<AnnotationTask> out;
        for (const auto& id : order_) out.push_back(tasks_.at(id));
        return out;
    }

    enum class SubmitResult { accepted, unknown_task, already_labeled, not_assigned, task_closed };

    SubmitResult submit(const std::string& task_id, SubmittedLabel label) {
        std::lock_guard lock(mutex_);
        auto it = tasks_.find(task_id);
        if (it == tasks_.end()) return SubmitResult::unknown_task;
        auto& t = it->second;
        if (t.labeled_by(label.annotator)) return SubmitResult::already_labeled;
        if (t.complete() || t.resolution) return SubmitResult::task_closed;
        if (!t.annotators.empty() &&
            std::find(t.annotators.begin(), t.annotators.end(), label.annotator) == t.annotators.end()) {
            return SubmitResult::not_assigned;
        }
        append("events.jsonl", json{{"type", "label"},
                                    {"task_id", task_id},
                                    {"annotator", label.annotator},
                                    {"label", label.label},
                                    {"criteria", label.criteria}});
        t.labels.push_back(std::move(label));
        return SubmitResult::accepted;
    }

    enum class ResolveResult { recorded, unknown_task, incomplete };

    ResolveResult resolve(const std::string& task_id, const std::string& label) {
        std::lock_guard lock(mutex_);
        auto it = tasks_.find(task_id);
        if (it == tasks_.end()) return ResolveResult::unknown_task;
        if (!it->second.complete()) return ResolveResult::incomplete;
        append("events.jsonl", json{{"type", "resolve"}, {"task_id", task_id}, {"label", label}});
        it->second.resolution = label;
        return ResolveResult::recorded;
    }

    /// Agreement over complete tasks of a batch, comparing the first two
    /// submissions of each task (assigned-annotator order when assigned).
    Agreement agreement(const std::string& batch) const {
        std::lock_guard lock(mutex_);
        Agreement a;
        std::vector<std::string> first, second;
        for (const auto& id : order_) {
            const auto& t = tasks_.at(id);
            if (t.batch != batch || !t.complete()) continue;
            auto [la, lb] = pair_of(t);
            first.push_back(la);
            second.push_back(lb);
            if (la != lb) a.disagreements.push_back(t.task_id);
        }
        a.tasks = first.size();
        if (!first.empty()) {
            a.observed = observed_agreement(first, second);
            a.kappa = cohen_kappa(first, second);
        }
        return a;
    }

private:
    static std::pair<std::string, std::string> pair_of(const AnnotationTask& t) {
        if (t.annotators.size() >= 2) {
            auto find = [&](const std::string& who) {
                for (const auto& l : t.labels) {
                    if (l.annotator == who) return l.label;
                }
                return std::string{};
            };
            return {find(t.annotators[0]), find(t.annotators[1])};
        }
        return {t.labels[0].label, t.labels[1].label};
    }

    void append(const std::string& file, const json& record) {
        std::ofstream out(dir_ / file, std::ios::app | std::ios::binary);
        if (!out) throw Error("cannot append to " + (dir_ / file).string());
        out << record.dump() << '\n';
        out.flush();
    }

    void replay() {
        if (std::filesystem::exists(dir_ / "tasks.jsonl")) {
            for_each_jsonl((dir_ / "tasks.jsonl").string(), [&](const json& j, std::size_t) {
                AnnotationTask t;
                t.task_id = j.at("task_id").get<std::string>();
                t.kind = parse_task_kind(j.at("kind").get<std::string>());
                t.batch = j.value("batch", std::string{});
                t.payload = j.value("payload", json::object());
                t.annotators = j.value("annotators", std::vector<std::string>{});
                order_.push_back(t.task_id);
                tasks_[t.task_id] = std::move(t);
            });
        }
        if (std::filesystem::exists(dir_ / "events.jsonl")) {
            for_each_jsonl((dir_ / "events.jsonl").string(), [&](const json& j, std::size_t) {
                auto it = tasks_.find(j.at("task_id").get<std::string>());
                if (it == tasks_.end()) return;
                if (j.at("type") == "label") {
                    it->second.labels.push_back({j.at("annotator").get<std::string>(), j.at("label").get<std::string>(),
                                                 j.value("criteria", std::vector<std::string>{})});
                } else if (j.at("type") == "resolve") {
                    it->second.resolution = j.at("label").get<std::string>();
                }
            });
        }
    }

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    std::vector<std::string> order_;
    std::map<std::string, AnnotationTask> tasks_;
};

// ---------------------------------------------------------------------------
// Request handling for the annotation wire protocol, independent of transport.

struct ServiceResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

class AnnotationService {
public:
    explicit AnnotationService(AnnotationStore& store, std::optional<ClusterModel> clusters = {})
        : store_(store), clusters_(std::move(clusters)) {}

    ServiceResponse handle(const std::string& method, const std::string& path,
                           const std::map<std::string, std::string>& query, const std::string& body) {
        try {
            return route(method, path, query, body);
        } catch (const json::exception& e) {
            return error(400, std::string("malformed request: ") + e.what());
        } catch (const Error& e) {
            return error(400, e.what());
        }
    }

    static json task_json(const AnnotationTask& t, bool with_labels) {
        json j{{"task_id", t.task_id},      {"kind", to_string(t.kind)}, {"batch", t.batch},
               {"payload", t.payload},      {"annotators", t.annotators}, {"status", t.status()}};
        if (with_labels) {
            json labels = json::array();
            for (const auto& l : t.labels) {
                labels.push_back({{"annotator", l.annotator}, {"label", l.label}, {"criteria", l.criteria}});
            }
            j["labels"] = labels;
            j["resolution"] = t.resolution ? json(*t.resolution) : json(nullptr);
        }
        return j;
    }

private:
    static ServiceResponse error(int status, const std::string& message) {
        return {status, json{{"error", message}}.dump()};
    }

    static ServiceResponse ok(const json& j) { return {200, j.dump()}; }

    static std::vector<std::string> split_path(const std::string& path) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (start <= path.size()) {
            const auto slash = path.find('/', start);
            const auto part = path.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
            if (!part.empty()) parts.push_back(part);
            if (slash == std::string::npos) break;
            start = slash + 1;
        }
        return parts;
    }

    static void validate_label(TaskKind kind, const std::string& label) {
        switch (kind) {
        case TaskKind::hope_label:
        case TaskKind::wild_verify:
            parse_hope_label(label);
            break;
        case TaskKind::relevance_label:
            if (label != "relevant" && label != "irrelevant") {
                throw Error("relevance label must be 'relevant' or 'irrelevant'");
            }
            break;
        case TaskKind::cluster_label:
            if (label.empty()) throw Error("cluster label must name a language");
            break;
        }
    }

    ServiceResponse route(const std::string& method, const std::string& path,
                          const std::map<std::string, std::string>& query, const std::string& body) {
        const auto parts = split_path(path);
        if (parts.size() < 2 || parts[0] != "api") return error(404, "no such endpoint");

        if (method == "GET" && parts.size() == 2 && parts[1] == "guideline") return ok(guideline_json());

        if (method == "GET" && parts.size() == 2 && parts[1] == "agreement") {
            auto it = query.find("batch");
            if (it == query.end()) return error(400, "missing 'batch' parameter");
            const auto a = store_.agreement(it->second);
            return ok(json{{"batch", it->second},
                           {"tasks", a.tasks},
                           {"p_o", a.observed ? json(*a.observed) : json(nullptr)},
                           {"kappa", a.kappa ? json(*a.kappa) : json(nullptr)},
                           {"disagreements", a.disagreements}});
        }

        if (method == "GET" && parts.size() == 4 && parts[1] == "clusters" && parts[3] == "sample") {
            if (!clusters_) return error(404, "no cluster model loaded");
            std::size_t k = 0;
            try {
                k = static_cast<std::size_t>(std::stoul(parts[2]));
            } catch (const std::exception&) {
                return error(400, "cluster index must be a non-negative integer");
            }
            for (const auto& a : clusters_->audit) {
                if (a.cluster == k) {
                    return ok(json{{"cluster", k}, {"sample_ids", a.sample_ids}, {"sample_texts", a.sample_texts}});
                }
            }
            return error(404, "no audit sample for cluster " + parts[2]);
        }

        if (parts.size() < 3 || parts[1] != "tasks") return error(404, "no such endpoint");

        if (method == "GET" && parts.size() == 3 && parts[2] == "next") {
            auto who = query.find("annotator");
            if (who == query.end() || who->second.empty()) return error(400, "missing 'annotator' parameter");
            std::optional<TaskKind> kind;
            if (auto k = query.find("kind"); k != query.end() && !k->second.empty()) kind = parse_task_kind(k->second);
            auto t = store_.next_task(who->second, kind);
            if (!t) return {204, "", "text/plain"};
            return ok(task_json(*t, false));
        }

        const std::string& id = parts[2];
        if (method == "GET" && parts.size() == 3) {
            auto t = store_.task(id);
            if (!t) return error(404, "unknown task " + id);
            if (!t->complete()) return error(403, "labels are visible only after every annotator has submitted");
            return ok(task_json(*t, true));
        }

        if (method == "POST" && parts.size() == 4 && parts[3] == "label") {
            const json req = json::parse(body);
            SubmittedLabel label;
            label.annotator = req.at("annotator").get<std::string>();
            label.label = req.at("label").get<std::string>();
            label.criteria = req.value("criteria", std::vector<std::string>{});
            if (label.annotator.empty()) return error(400, "annotator must be non-empty");
            for (const auto& c : label.criteria) {
                if (!find_criterion(c)) return error(400, "unknown criterion id '" + c + "'");
            }
            auto t = store_.task(id);
            if (!t) return error(404, "unknown task " + id);
            validate_label(t->kind, label.label);
            switch (store_.submit(id, std::move(label))) {
            case AnnotationStore::SubmitResult::accepted: {
                const auto updated = store_.task(id);
                return ok(json{{"ok", true}, {"task_id", id}, {"status", updated->status()}});
            }
            case AnnotationStore::SubmitResult::unknown_task: return error(404, "unknown task " + id);
            case AnnotationStore::SubmitResult::already_labeled: return error(409, "already labeled by you");
            case AnnotationStore::SubmitResult::not_assigned: return error(403, "annotator not assigned to task");
            case AnnotationStore::SubmitResult::task_closed: return error(409, "task already complete");
            }
        }

        if (method == "POST" && parts.size() == 4 && parts[3] == "resolve") {
            const json req = json::parse(body);
            const auto label = req.at("label").get<std::string>();
            auto t = store_.task(id);
            if (!t) return error(404, "unknown task " + id);
            validate_label(t->kind, label);
            switch (store_.resolve(id, label)) {
            case AnnotationStore::ResolveResult::recorded:
                return ok(json{{"ok", true}, {"task_id", id}, {"status", "resolved"}, {"label", label}});
            case AnnotationStore::ResolveResult::unknown_task: return error(404, "unknown task " + id);
            case AnnotationStore::ResolveResult::incomplete:
                return error(409, "task cannot be resolved before every annotator has submitted");
            }
        }

        return error(404, "no such endpoint");
    }

    AnnotationStore& store_;
    std::optional<ClusterModel> clusters_;
};

} // namespace commentlab
