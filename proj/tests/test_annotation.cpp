#include <gtest/gtest.h>

#include <thread>

#include <commentlab/http_service.hpp>

#include "support/tempdir.hpp"

using namespace commentlab;
using commentlab::testing::TempDir;
using commentlab::testing::slurp;

namespace {

std::string label_body(const std::string& who, const std::string& label, json criteria = json::array()) {
    return json{{"annotator", who}, {"label", label}, {"criteria", criteria}}.dump();
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST(Guideline, ThirteenCriteria) {
    EXPECT_EQ(kHopeCriteria.size(), 13u);
    const auto g = guideline_json();
    EXPECT_EQ(g.at("positive").size() + g.at("negative").size(), 13u);
    EXPECT_TRUE(find_criterion("P8"));
    EXPECT_FALSE(find_criterion("P9"));
}

TEST(Store, AppendOnlyReplay) {
    TempDir dir;
    {
        AnnotationStore store(dir.path());
        store.add_task(TaskKind::hope_label, "b1", {{"comment_id", "c1"}}, {"ann1", "ann2"});
        store.add_task(TaskKind::hope_label, "b1", {{"comment_id", "c2"}});
        EXPECT_EQ(store.submit("t1", {"ann1", "hope", {"P8"}}), AnnotationStore::SubmitResult::accepted);
        EXPECT_EQ(store.submit("t1", {"ann1", "hope", {}}), AnnotationStore::SubmitResult::already_labeled);
        EXPECT_EQ(store.submit("t1", {"ann3", "hope", {}}), AnnotationStore::SubmitResult::not_assigned);
        EXPECT_EQ(store.resolve("t1", "hope"), AnnotationStore::ResolveResult::incomplete);
        EXPECT_EQ(store.submit("t1", {"ann2", "not_hope", {}}), AnnotationStore::SubmitResult::accepted);
        EXPECT_EQ(store.submit("t9", {"ann2", "hope", {}}), AnnotationStore::SubmitResult::unknown_task);
        EXPECT_THROW(store.add_task(TaskKind::hope_label, "b1", json::object(), {}, std::string("t1")), Error);
    }
    const std::string events_before = slurp(dir.file("events.jsonl"));
    {
        AnnotationStore store(dir.path());
        const auto t = store.task("t1");
        ASSERT_TRUE(t);
        EXPECT_EQ(t->labels.size(), 2u);
        EXPECT_EQ(t->labels[0].criteria, (std::vector<std::string>{"P8"}));
        EXPECT_EQ(t->status(), "complete");
        EXPECT_FALSE(t->consensus());
        EXPECT_EQ(store.resolve("t1", "hope"), AnnotationStore::ResolveResult::recorded);
    }
    const std::string events_after = slurp(dir.file("events.jsonl"));
    EXPECT_EQ(events_after.substr(0, events_before.size()), events_before);
    EXPECT_EQ(line_count(events_after), line_count(events_before) + 1);
    AnnotationStore again(dir.path());
    EXPECT_EQ(again.task("t1")->consensus(), "hope");
    EXPECT_EQ(again.task("t1")->labels.size(), 2u);
    EXPECT_EQ(again.tasks().size(), 2u);
}

TEST(Store, NextTaskSkipsDoneAndUnassigned) {
    TempDir dir;
    AnnotationStore store(dir.path());
    store.add_task(TaskKind::relevance_label, "b", json::object(), {"x", "y"});
    store.add_task(TaskKind::hope_label, "b", json::object());
    EXPECT_EQ(store.next_task("z", std::nullopt)->task_id, "t2");
    EXPECT_EQ(store.next_task("x", std::nullopt)->task_id, "t1");
    EXPECT_EQ(store.next_task("x", TaskKind::hope_label)->task_id, "t2");
    store.submit("t1", {"x", "relevant", {}});
    EXPECT_EQ(store.next_task("x", std::nullopt)->task_id, "t2");
    store.submit("t2", {"a", "hope", {}});
    store.submit("t2", {"b", "hope", {}});
    EXPECT_FALSE(store.next_task("x", std::nullopt));
    EXPECT_EQ(store.task("t2")->consensus(), "hope");
}

TEST(Store, AgreementTwoDisagreementsInTen) {
    TempDir dir;
    AnnotationStore store(dir.path());
    const std::vector<std::string> a{"hope", "hope", "hope", "hope", "hope", "not_hope", "not_hope", "not_hope", "not_hope", "not_hope"};
    const std::vector<std::string> b{"hope", "hope", "hope", "hope", "not_hope", "not_hope", "not_hope", "not_hope", "not_hope", "hope"};
    for (std::size_t i = 0; i < 10; ++i) {
        const auto id = store.add_task(TaskKind::hope_label, "b1", json::object(), {"ann1", "ann2"});
        // Submission order must not matter for the pairing.
        if (i % 2) {
            store.submit(id, {"ann2", b[i], {}});
            store.submit(id, {"ann1", a[i], {}});
        } else {
            store.submit(id, {"ann1", a[i], {}});
            store.submit(id, {"ann2", b[i], {}});
        }
    }
    const auto ag = store.agreement("b1");
    EXPECT_EQ(ag.tasks, 10u);
    EXPECT_DOUBLE_EQ(*ag.observed, 0.8);
    EXPECT_NEAR(*ag.kappa, 0.6, 1e-12);
    EXPECT_EQ(ag.disagreements, (std::vector<std::string>{"t5", "t10"}));
    EXPECT_FALSE(store.agreement("other").kappa);
}

TEST(Service, RoutesAndStatusCodes) {
    TempDir dir;
    AnnotationStore store(dir.path());
    ClusterModel clusters;
    clusters.k = 1;
    clusters.audit = {{0, {"c1"}, {"hello"}, std::nullopt}};
    AnnotationService svc(store, clusters);
    store.add_task(TaskKind::hope_label, "b1", {{"comment_id", "c1"}, {"text", "we want peace"}}, {"ann1", "ann2"});

    EXPECT_EQ(svc.handle("GET", "/api/guideline", {}, "").status, 200);
    EXPECT_EQ(svc.handle("GET", "/api/nothing", {}, "").status, 404);
    EXPECT_EQ(svc.handle("GET", "/api/tasks/next", {}, "").status, 400);

    const auto next = svc.handle("GET", "/api/tasks/next", {{"annotator", "ann1"}}, "");
    ASSERT_EQ(next.status, 200);
    const auto task = json::parse(next.body);
    EXPECT_EQ(task.at("task_id"), "t1");
    EXPECT_FALSE(task.contains("labels"));
    EXPECT_EQ(svc.handle("GET", "/api/tasks/next", {{"annotator", "ann3"}}, "").status, 204);

    EXPECT_EQ(svc.handle("POST", "/api/tasks/t1/label", {}, label_body("ann1", "maybe")).status, 400);
    EXPECT_EQ(svc.handle("POST", "/api/tasks/t1/label", {}, label_body("ann1", "hope", {"P99"})).status, 400);
    EXPECT_EQ(svc.handle("POST", "/api/tasks/t1/label", {}, "{not json").status, 400);
    EXPECT_EQ(svc.handle("POST", "/api/tasks/t1/label", {}, label_body("ann1", "hope", {"P8"})).status, 200);
    EXPECT_EQ(svc.handle("POST", "/api/tasks/t1/label", {}, label_body("ann1", "hope")).status, 409);
    EXPECT_EQ(svc.handle("POST", "/api/tasks/t1/label", {}, label_body("ann3", "hope")).status, 403);
    EXPECT_EQ(svc.handle("GET", "/api/tasks/t1", {}, "").status, 403);
    EXPECT_EQ(svc.handle("POST", "/api/tasks/t1/resolve", {}, R"({"label":"hope"})").status, 409);
    EXPECT_EQ(svc.handle("POST", "/api/tasks/t2/label", {}, label_body("ann1", "hope")).status, 404);

    EXPECT_EQ(svc.handle("POST", "/api/tasks/t1/label", {}, label_body("ann2", "not_hope", {"N3"})).status, 200);
    const auto full = svc.handle("GET", "/api/tasks/t1", {}, "");
    ASSERT_EQ(full.status, 200);
    EXPECT_EQ(json::parse(full.body).at("labels").size(), 2u);
    EXPECT_EQ(svc.handle("POST", "/api/tasks/t1/resolve", {}, R"({"label":"hope"})").status, 200);
    EXPECT_EQ(json::parse(svc.handle("GET", "/api/tasks/t1", {}, "").body).at("resolution"), "hope");

    const auto ag = json::parse(svc.handle("GET", "/api/agreement", {{"batch", "b1"}}, "").body);
    EXPECT_EQ(ag.at("tasks"), 1);
    EXPECT_DOUBLE_EQ(ag.at("p_o").get<double>(), 0.0);
    EXPECT_EQ(svc.handle("GET", "/api/agreement", {}, "").status, 400);

    EXPECT_EQ(svc.handle("GET", "/api/clusters/0/sample", {}, "").status, 200);
    EXPECT_EQ(svc.handle("GET", "/api/clusters/4/sample", {}, "").status, 404);
    EXPECT_EQ(svc.handle("GET", "/api/clusters/x/sample", {}, "").status, 400);
}

TEST(Service, ClusterLabelsAcceptLanguageNames) {
    TempDir dir;
    AnnotationStore store(dir.path());
    AnnotationService svc(store);
    store.add_task(TaskKind::cluster_label, "langid", {{"cluster", 0}});
    EXPECT_EQ(svc.handle("POST", "/api/tasks/t1/label", {}, label_body("a", "hindi (E)")).status, 200);
    EXPECT_EQ(svc.handle("POST", "/api/tasks/t1/label", {}, label_body("b", "")).status, 400);
    EXPECT_EQ(svc.handle("GET", "/api/clusters/0/sample", {}, "").status, 404);
}

TEST(Http, HeadlessRoundTrip) {
    TempDir dir;
    AnnotationStore store(dir.path());
    for (int i = 0; i < 3; ++i) store.add_task(TaskKind::hope_label, "b1", {{"comment_id", "c" + std::to_string(i)}});
    AnnotationService svc(store);
    httplib::Server server;
    mount_annotation_api(server, svc);
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    for (const std::string who : {"ann1", "ann2"}) {
        while (true) {
            auto next = client.Get("/api/tasks/next?annotator=" + who);
            ASSERT_TRUE(next);
            if (next->status == 204) break;
            ASSERT_EQ(next->status, 200);
            const auto id = json::parse(next->body).at("task_id").get<std::string>();
            auto posted = client.Post("/api/tasks/" + id + "/label", label_body(who, "hope"), "application/json");
            ASSERT_TRUE(posted);
            EXPECT_EQ(posted->status, 200);
        }
    }
    auto ag = client.Get("/api/agreement?batch=b1");
    ASSERT_TRUE(ag);
    const auto j = json::parse(ag->body);
    EXPECT_EQ(j.at("tasks"), 3);
    EXPECT_DOUBLE_EQ(j.at("kappa").get<double>(), 1.0);
    auto missing = client.Get("/api/tasks/t42");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);

    server.stop();
    worker.join();
    EXPECT_EQ(line_count(slurp(dir.file("events.jsonl"))), 6u);
}
