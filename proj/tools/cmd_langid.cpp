#include <iostream>
#include <numeric>

#include "cli_support.hpp"

namespace commentlab::cli {

namespace {

json report_json(const EvalReport& r) {
    json per = json::object();
    for (const auto& [lang, m] : r.per_language) {
        per[lang] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                     {"support", m.support},     {"support_share", m.support_share}};
    }
    return {{"accuracy", r.accuracy}, {"total", r.total}, {"per_language", per}};
}

void print_report(const std::string& title, const EvalReport& r) {
    std::cout << title << ": accuracy " << fixed(r.accuracy) << " over " << r.total << " comments\n";
    for (const auto& [lang, m] : r.per_language) {
        std::cout << "  " << lang << "  P " << fixed(m.precision, 3) << "  R " << fixed(m.recall, 3) << "  F1 "
                  << fixed(m.f1, 3) << "  share " << fixed(m.support_share, 3) << '\n';
    }
}

std::map<std::string, std::string> read_language_column(const std::string& path) {
    std::map<std::string, std::string> out;
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        out[j.at("comment_id").get<std::string>()] = j.at("language").get<std::string>();
    });
    return out;
}

} // namespace

void register_langid_commands(CLI::App& app, Context& ctx) {
    // langid-fit ---------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("langid-fit", "Choose k by silhouette and cluster document embeddings");
        path_flag(cmd, ctx, "tokenized", "tokenized comment JSONL");
        path_flag(cmd, ctx, "embed_model", "binary embedding model");
        path_flag(cmd, ctx, "comments", "comment JSONL; audit samples show raw text when given");
        path_flag(cmd, ctx, "cluster_model", "output: unlabeled cluster model JSON");
        auto k = std::make_shared<std::size_t>(0);
        auto seed = std::make_shared<std::uint64_t>(0);
        cmd->add_option("--k", *k, "fixed number of clusters (skips silhouette selection)");
        cmd->add_option("--seed", *seed, "clustering seed");
        cmd->callback([&ctx, cmd, k, seed] {
            auto cfg = ctx.config.langid;
            override_if(cmd, "--k", *k, cfg.k);
            override_if(cmd, "--seed", *seed, cfg.seed);

            const auto tokenized = load_tokenized(ctx.input("tokenized"));
            const auto model = EmbeddingModel::load(ctx.input("embed_model"));
            std::vector<DocEmbedding> docs;
            std::vector<Vector> points;
            for (const auto& t : tokenized) {
                docs.push_back(model.doc_embedding(t.tokens, t.comment_id));
                if (!docs.back().empty) points.push_back(docs.back().vector);
            }
            std::cout << points.size() << " non-empty documents of " << docs.size() << '\n';

            std::size_t chosen = cfg.k;
            if (chosen == 0) {
                std::vector<std::size_t> idx(points.size());
                std::iota(idx.begin(), idx.end(), std::size_t{0});
                Rng rng(cfg.seed);
                rng.shuffle(idx);
                if (idx.size() > cfg.select_sample) idx.resize(cfg.select_sample);
                std::sort(idx.begin(), idx.end());
                std::vector<Vector> sample;
                for (auto i : idx) sample.push_back(points[i]);
                const auto sel = select_k(sample, {cfg.k_min, cfg.k_max, cfg.silhouette_sample, cfg.seed});
                for (const auto& [kk, s] : sel.silhouette) std::cout << "  k=" << kk << " silhouette " << fixed(s) << '\n';
                chosen = sel.k;
            }
            auto result = kmeans(points, chosen, cfg.seed);
            auto cm = std::move(result.model);
            cm.audit = draw_cluster_samples(cm, docs, cfg.sample_size, cfg.seed);

            std::map<std::string, std::string> texts;
            if (auto c = ctx.optional_input("comments")) {
                for (const auto& comment : load_comments(*c)) texts[comment.id] = comment.text;
            } else {
                for (const auto& t : tokenized) texts[t.comment_id] = join(t.tokens);
            }
            for (auto& a : cm.audit) {
                for (const auto& id : a.sample_ids) a.sample_texts.push_back(texts[id]);
            }
            save_cluster_model(ctx.output("cluster_model"), cm);
            std::cout << "k=" << cm.k << ", inertia " << fixed(cm.inertia) << ", " << result.iterations
                      << " iterations, seed " << cm.seed << '\n';
        });
    }

    // langid-label -------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("langid-label", "Attach human language labels to clusters");
        path_flag(cmd, ctx, "cluster_model", "unlabeled cluster model JSON");
        path_flag(cmd, ctx, "cluster_labels", "cluster<TAB>language<TAB>script_variant[<TAB>dominant_count] TSV");
        path_flag(cmd, ctx, "labeled_cluster_model", "output: labeled cluster model JSON");
        cmd->callback([&ctx] {
            auto cm = load_cluster_model(ctx.input("cluster_model"));
            cm = label_clusters(std::move(cm), load_cluster_labels(ctx.input("cluster_labels")));
            save_cluster_model(ctx.output("labeled_cluster_model"), cm);
            for (std::size_t c = 0; c < cm.k; ++c) std::cout << "  cluster " << c << " -> " << cm.labels[c]->display() << '\n';
        });
    }

    // langid-classify ----------------------------------------------------
    {
        auto* cmd = app.add_subcommand("langid-classify", "Assign each comment the language of its nearest centroid");
        path_flag(cmd, ctx, "labeled_cluster_model", "labeled cluster model JSON");
        path_flag(cmd, ctx, "embed_model", "binary embedding model");
        path_flag(cmd, ctx, "tokenized", "tokenized comment JSONL");
        path_flag(cmd, ctx, "predictions", "output: per-comment language JSONL");
        cmd->callback([&ctx] {
            const auto cm = load_cluster_model(ctx.input("labeled_cluster_model"));
            const auto model = EmbeddingModel::load(ctx.input("embed_model"));
            const auto tokenized = load_tokenized(ctx.input("tokenized"));
            auto out = open_output(ctx.output("predictions"));
            std::map<std::string, std::size_t> counts;
            for (const auto& t : tokenized) {
                const auto tag = classify(cm, model.doc_embedding(t.tokens, t.comment_id));
                ++counts[tag.display()];
                out << json{{"comment_id", t.comment_id},
                            {"language", tag.display()},
                            {"script_variant", to_string(tag.script_variant)}}
                           .dump()
                    << '\n';
            }
            std::cout << "classified " << tokenized.size() << " comments\n";
            for (const auto& [lang, n] : counts) std::cout << "  " << lang << ' ' << n << '\n';
        });
    }

    // langid-eval --------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("langid-eval", "Score predictions against gold language labels");
        path_flag(cmd, ctx, "predictions", "prediction JSONL (comment_id, language)");
        path_flag(cmd, ctx, "gold", "gold JSONL (comment_id, language)");
        path_flag(cmd, ctx, "external_predictions", "ranked predictions of another identifier");
        path_flag(cmd, ctx, "langid_report", "output: evaluation JSON");
        auto languages = std::make_shared<std::vector<std::string>>();
        cmd->add_option("--languages", *languages, "corpus language set for the restricted external baseline")
            ->delimiter(',');
        cmd->callback([&ctx, languages] {
            const auto gold = read_language_column(ctx.input("gold"));
            auto align = [&](const std::map<std::string, std::string>& pred, const std::string& what) {
                std::vector<std::string> p, g;
                for (const auto& [id, lang] : gold) {
                    auto it = pred.find(id);
                    if (it == pred.end()) throw Error(what + " has no prediction for comment " + id);
                    p.push_back(it->second);
                    g.push_back(lang);
                }
                return evaluate(p, g);
            };
            json report;
            const auto ours = align(read_language_column(ctx.input("predictions")), "predictions");
            report["clusters"] = report_json(ours);
            print_report("cluster labels", ours);

            if (auto ext = ctx.optional_input("external_predictions")) {
                const std::set<std::string> corpus_langs(languages->begin(), languages->end());
                std::map<std::string, std::string> top1, restricted;
                for (const auto& e : load_external_predictions(*ext)) {
                    if (e.ranked.empty()) throw Error(*ext + ": empty ranked list for " + e.comment_id);
                    top1[e.comment_id] = std::max_element(e.ranked.begin(), e.ranked.end(), [](const auto& a, const auto& b) {
                                             return a.confidence < b.confidence;
                                         })->language;
                    if (!corpus_langs.empty()) restricted[e.comment_id] = fair_restrict(e.ranked, corpus_langs);
                }
                const auto r1 = align(top1, "external predictions");
                report["external"] = report_json(r1);
                print_report("external", r1);
                if (!corpus_langs.empty()) {
                    const auto r2 = align(restricted, "external predictions");
                    report["external_restricted"] = report_json(r2);
                    print_report("external (restricted)", r2);
                }
            }
            write_json(ctx.output("langid_report"), report);
        });
    }
}

} // namespace commentlab::cli
