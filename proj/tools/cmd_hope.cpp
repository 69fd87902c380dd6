#include <iostream>
#include <sstream>

#include "cli_support.hpp"

namespace commentlab::cli {

namespace {

struct Resources {
    std::optional<PhraseLexicon> lexicon;
    std::optional<EmbeddingModel> embedding;

    const PhraseLexicon* lex() const { return lexicon ? &*lexicon : nullptr; }
    const EmbeddingModel* emb() const { return embedding ? &*embedding : nullptr; }
};

FeatureSet parse_features(const std::string& spec) {
    FeatureSet f{false, false, false};
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part == "ngrams") f.ngrams = true;
        else if (part == "intent") f.intent = true;
        else if (part == "embedding") f.embedding = true;
        else throw Error("unknown feature '" + part + "' (expected ngrams, intent, embedding)");
    }
    require(f.ngrams || f.intent || f.embedding, "empty feature set");
    return f;
}

/// Explicit feature lists require their artifacts; otherwise every configured
/// resource is used.
FeatureSet resolve_features(const Context& ctx, const std::string& spec) {
    if (!spec.empty()) return parse_features(spec);
    return {true, ctx.path("lexicon").has_value(), ctx.path("embed_model").has_value()};
}

Resources load_resources(const Context& ctx, const FeatureSet& f, bool need_lexicon = false) {
    Resources r;
    if (f.intent || need_lexicon) r.lexicon = PhraseLexicon::load(ctx.input("lexicon"));
    if (f.embedding) r.embedding = EmbeddingModel::load(ctx.input("embed_model"));
    return r;
}

json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

json summary_json(const EvalSummary& s, const FeatureSet& f) {
    json runs = json::array();
    for (const auto& r : s.details) {
        runs.push_back({{"lambda", r.lambda},
                        {"threshold", r.threshold},
                        {"precision", r.test.precision},
                        {"recall", r.test.recall},
                        {"f1", r.test.f1},
                        {"auc", r.auc}});
    }
    return {{"features", f.name()},
            {"runs", s.runs},
            {"precision", mean_std_json(s.precision)},
            {"recall", mean_std_json(s.recall)},
            {"f1", mean_std_json(s.f1)},
            {"auc", mean_std_json(s.auc)},
            {"per_run", runs}};
}

std::string pct(const MeanStd& m) { return fixed(100 * m.mean, 2) + " ± " + fixed(100 * m.std, 2); }

std::vector<PoolItem> load_pool(const std::string& path) {
    std::vector<PoolItem> pool;
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        PoolItem p;
        p.comment_id = j.at("comment_id").get<std::string>();
        p.week_bucket = j.value("week_bucket", 1);
        p.tokens = j.contains("tokens") ? j.at("tokens").get<Tokens>() : tokenize(j.at("text").get<std::string>());
        pool.push_back(std::move(p));
    });
    return pool;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

} // namespace

void register_hope_commands(CLI::App& app, Context& ctx) {
    // hope-train ---------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("hope-train", "Fit the hope-speech classifier on labeled comments");
        path_flag(cmd, ctx, "labeled", "labeled JSONL (comment_id, text, label, week_bucket)");
        path_flag(cmd, ctx, "lexicon", "phrase lexicon TSV (intent feature)");
        path_flag(cmd, ctx, "embed_model", "embedding model (document-embedding feature)");
        path_flag(cmd, ctx, "classifier", "output: classifier JSON");
        auto lambda = std::make_shared<double>(0);
        auto threshold = std::make_shared<double>(0.5);
        auto features = std::make_shared<std::string>();
        cmd->add_option("--lambda", *lambda, "L2 regularisation strength");
        cmd->add_option("--threshold", *threshold, "decision threshold")->capture_default_str();
        cmd->add_option("--features", *features, "comma list of ngrams,intent,embedding");
        cmd->callback([&ctx, cmd, lambda, threshold, features] {
            auto cfg = ctx.config.hope;
            override_if(cmd, "--lambda", *lambda, cfg.lambda);
            const auto fs = resolve_features(ctx, *features);
            const auto res = load_resources(ctx, fs);
            const auto labeled = load_labeled(ctx.input("labeled"));
            const auto data = prepare_examples(labeled, res.lex(), res.emb());
            TrainOptions opts;
            opts.lambda = cfg.lambda;
            opts.features = fs;
            OptimizerTrace trace;
            auto c = train(data, opts, &trace);
            c.threshold = *threshold;
            if (fs.embedding) {
                std::ostringstream ref;
                ref << "fnv1a32:" << std::hex << fnv1a(read_file(ctx.input("embed_model")));
                c.embedding_model_ref = ref.str();
            }
            save_hope_classifier(ctx.output("classifier"), c);
            std::cout << "trained on " << data.size() << " examples (" << fs.name() << "), " << c.vocab.size()
                      << " n-gram features, lambda " << c.lambda << ", " << trace.iterations << " iterations, "
                      << "final gradient norm " << trace.final_gradient_norm << '\n';
        });
    }

    // hope-eval ----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("hope-eval", "Repeated stratified 80/10/10 evaluation");
        path_flag(cmd, ctx, "labeled", "labeled JSONL");
        path_flag(cmd, ctx, "lexicon", "phrase lexicon TSV (intent feature)");
        path_flag(cmd, ctx, "embed_model", "embedding model (document-embedding feature)");
        path_flag(cmd, ctx, "hope_report", "output: evaluation JSON");
        auto runs = std::make_shared<std::size_t>(0);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto features = std::make_shared<std::string>();
        auto ablation = std::make_shared<bool>(false);
        cmd->add_option("--runs", *runs, "number of random splits");
        cmd->add_option("--seed", *seed, "split seed");
        cmd->add_option("--features", *features, "comma list of ngrams,intent,embedding");
        cmd->add_flag("--ablation", *ablation, "evaluate n-grams alone and with each extra feature");
        cmd->callback([&ctx, cmd, runs, seed, features, ablation] {
            auto cfg = ctx.config.hope;
            override_if(cmd, "--runs", *runs, cfg.runs);
            override_if(cmd, "--seed", *seed, cfg.seed);
            const auto full = resolve_features(ctx, *features);
            std::vector<FeatureSet> sets{full};
            if (*ablation) {
                sets = {{true, false, false}};
                if (full.intent) sets.push_back({true, true, false});
                if (full.embedding) sets.push_back({true, false, true});
                if (full.intent && full.embedding) sets.push_back({true, true, true});
            }
            const auto res = load_resources(ctx, full);
            const auto labeled = load_labeled(ctx.input("labeled"));
            const auto data = prepare_examples(labeled, res.lex(), res.emb());
            json report{{"seed", cfg.seed}, {"lambdas", cfg.lambdas}, {"examples", data.size()}, {"results", json::array()}};
            for (const auto& fs : sets) {
                EvalOptions opts;
                opts.runs = cfg.runs;
                opts.seed = cfg.seed;
                opts.lambdas = cfg.lambdas;
                opts.features = fs;
                const auto s = evaluate_repeated(data, opts);
                report["results"].push_back(summary_json(s, fs));
                std::cout << fs.name() << ": P " << pct(s.precision) << "  R " << pct(s.recall) << "  F1 " << pct(s.f1)
                          << "  AUC " << pct(s.auc) << "  (" << s.runs << " runs)\n";
            }
            write_json(ctx.output("hope_report"), report);
        });
    }

    // hope-sample --------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("hope-sample", "Plan the next active-learning labeling batch");
        path_flag(cmd, ctx, "pool", "unlabeled pool JSONL (comment_id, text, week_bucket)");
        path_flag(cmd, ctx, "classifier", "current classifier JSON (omit for the first round)");
        path_flag(cmd, ctx, "labeled", "labeled JSONL; these ids are never resampled");
        path_flag(cmd, ctx, "lexicon", "keyword phrases for the first round and the intent feature");
        path_flag(cmd, ctx, "embed_model", "embedding model when the classifier uses it");
        path_flag(cmd, ctx, "batch", "output: sampled batch JSONL");
        path_flag(cmd, ctx, "store", "annotation store directory; tasks are enqueued when given");
        auto batch_size = std::make_shared<std::size_t>(0);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto batch_id = std::make_shared<std::string>("round");
        auto annotators = std::make_shared<std::string>();
        cmd->add_option("--batch-size", *batch_size, "comments per round");
        cmd->add_option("--seed", *seed, "sampling seed");
        cmd->add_option("--batch-id", *batch_id, "task batch name in the annotation store")->capture_default_str();
        cmd->add_option("--annotators", *annotators, "comma list of assigned annotators");
        cmd->callback([&ctx, cmd, batch_size, seed, batch_id, annotators] {
            auto cfg = ctx.config.hope;
            override_if(cmd, "--batch-size", *batch_size, cfg.batch_size);
            override_if(cmd, "--seed", *seed, cfg.seed);

            auto pool = load_pool(ctx.input("pool"));
            std::set<std::string> labeled_ids;
            if (auto l = ctx.optional_input("labeled")) {
                for (const auto& e : load_labeled(*l)) labeled_ids.insert(e.comment_id);
            }
            std::optional<HopeClassifier> classifier;
            if (auto c = ctx.optional_input("classifier")) classifier = load_hope_classifier(*c);
            const FeatureSet fs = classifier ? classifier->features : FeatureSet{false, false, false};
            const auto res = load_resources(ctx, {false, fs.intent, fs.embedding && classifier->embedding_dim > 0},
                                            !classifier);
            if (classifier) {
                for (auto& p : pool) p.features = featurize(p.tokens, res.lex(), res.emb(), classifier->vocab);
            }
            ActiveLearningOptions opts;
            opts.batch_size = cfg.batch_size;
            opts.seed = cfg.seed;
            const PhraseLexicon none;
            const auto plan = plan_active_learning_round(classifier ? &*classifier : nullptr, pool, labeled_ids,
                                                         res.lexicon ? *res.lexicon : none, opts);

            std::map<std::string, const PoolItem*> by_id;
            for (const auto& p : pool) by_id[p.comment_id] = &p;
            auto out = open_output(ctx.output("batch"));
            std::vector<std::pair<std::string, std::string>> picked;
            auto emit = [&](const std::string& id, const std::string& source, std::optional<double> prob) {
                json j{{"comment_id", id}, {"week_bucket", by_id.at(id)->week_bucket}, {"source", source}};
                if (prob) j["probability"] = *prob;
                out << j.dump() << '\n';
                picked.emplace_back(id, source);
            };
            for (const auto& s : plan.uncertain) emit(s.comment_id, "uncertain", s.probability);
            for (const auto& s : plan.spot_checks) emit(s.comment_id, "spot_check", s.probability);
            for (const auto& id : plan.keyword_seeded) emit(id, "keyword", std::nullopt);
            for (const auto& id : plan.random) emit(id, "random", std::nullopt);

            std::cout << "batch of " << picked.size() << ": " << plan.uncertain.size() << " uncertain, "
                      << plan.spot_checks.size() << " spot checks, " << plan.keyword_seeded.size() << " keyword, "
                      << plan.random.size() << " random\n";

            if (auto dir = ctx.path("store")) {
                AnnotationStore store(*dir);
                for (const auto& [id, source] : picked) {
                    store.add_task(TaskKind::hope_label, *batch_id,
                                   {{"comment_id", id}, {"text", join(by_id.at(id)->tokens)}, {"source", source}},
                                   split_csv(*annotators));
                }
                std::cout << "enqueued " << picked.size() << " tasks in batch '" << *batch_id << "'\n";
            }
        });
    }

    // hope-wild ----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("hope-wild", "Run the classifier on a per-day sample of unlabeled comments");
        path_flag(cmd, ctx, "classifier", "classifier JSON");
        path_flag(cmd, ctx, "comments", "comment JSONL");
        path_flag(cmd, ctx, "lexicon", "phrase lexicon TSV when the classifier uses the intent feature");
        path_flag(cmd, ctx, "embed_model", "embedding model when the classifier uses it");
        path_flag(cmd, ctx, "wild_positives", "output: predicted positives JSONL");
        path_flag(cmd, ctx, "verdicts", "human verdict JSONL (comment_id, label, criteria)");
        path_flag(cmd, ctx, "wild_report", "output: precision and criteria breakdown JSON");
        path_flag(cmd, ctx, "store", "annotation store directory; verification tasks are enqueued when given");
        auto quota = std::make_shared<std::size_t>(0);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto batch_id = std::make_shared<std::string>("wild");
        auto annotators = std::make_shared<std::string>();
        cmd->add_option("--quota", *quota, "comments sampled per day");
        cmd->add_option("--seed", *seed, "sampling seed");
        cmd->add_option("--batch-id", *batch_id, "task batch name in the annotation store")->capture_default_str();
        cmd->add_option("--annotators", *annotators, "comma list of assigned annotators");
        cmd->callback([&ctx, cmd, quota, seed, batch_id, annotators] {
            auto cfg = ctx.config.hope;
            override_if(cmd, "--quota", *quota, cfg.per_day_quota);
            override_if(cmd, "--seed", *seed, cfg.seed);
            const auto classifier = load_hope_classifier(ctx.input("classifier"));
            const auto res = load_resources(
                ctx, {false, classifier.features.intent, classifier.features.embedding && classifier.embedding_dim > 0});
            const auto comments = load_comments(ctx.input("comments"));
            std::map<std::string, const Comment*> by_id;
            std::vector<WildCandidate> candidates;
            for (const auto& c : comments) {
                by_id[c.id] = &c;
                candidates.push_back({c.id, utc_day(c.timestamp),
                                      featurize(tokenize(c.text), res.lex(), res.emb(), classifier.vocab)});
            }
            const auto run = wild_run(classifier, candidates, cfg.per_day_quota, cfg.seed);
            for (const auto& w : run.warnings) std::cerr << "warning: " << w << '\n';
            {
                auto out = open_output(ctx.output("wild_positives"));
                for (const auto& p : run.positives) {
                    out << json{{"comment_id", p.comment_id}, {"probability", p.probability}}.dump() << '\n';
                }
            }
            std::size_t sampled = 0;
            for (const auto& [d, n] : run.sampled_per_day) sampled += n;
            std::cout << run.positives.size() << " predicted positives among " << sampled << " sampled comments over "
                      << run.sampled_per_day.size() << " days\n";

            if (auto v = ctx.optional_input("verdicts")) {
                std::map<std::string, VerifiedLabel> verdicts;
                for_each_jsonl(*v, [&](const json& j, std::size_t) {
                    verdicts[j.at("comment_id").get<std::string>()] = {
                        parse_hope_label(j.at("label").get<std::string>()) == HopeLabel::hope,
                        j.value("criteria", std::vector<std::string>{})};
                });
                const auto ver = verify_wild(run.positives, verdicts);
                std::cout << "precision " << (ver.precision ? fixed(*ver.precision) : "n/a") << " (" << ver.confirmed
                          << " of " << ver.verified << " verified)\n";
                if (ctx.path("wild_report")) {
                    write_json(ctx.output("wild_report"),
                               {{"predicted", ver.predicted},
                                {"verified", ver.verified},
                                {"confirmed", ver.confirmed},
                                {"precision", ver.precision ? json(*ver.precision) : json(nullptr)},
                                {"criteria_breakdown", ver.criteria_breakdown}});
                }
            }
            if (auto dir = ctx.path("store")) {
                AnnotationStore store(*dir);
                for (const auto& p : run.positives) {
                    const auto* c = by_id.at(p.comment_id);
                    store.add_task(TaskKind::wild_verify, *batch_id,
                                   {{"comment_id", c->id}, {"text", c->text}, {"probability", p.probability}},
                                   split_csv(*annotators));
                }
                std::cout << "enqueued " << run.positives.size() << " verification tasks in batch '" << *batch_id << "'\n";
            }
        });
    }

    // kappa --------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("kappa", "Cohen's kappa between two annotators");
        path_flag(cmd, ctx, "labels_a", "first annotator's labels, one per line");
        path_flag(cmd, ctx, "labels_b", "second annotator's labels, one per line");
        path_flag(cmd, ctx, "store", "annotation store directory (with --batch)");
        path_flag(cmd, ctx, "kappa_report", "output: agreement JSON");
        auto batch = std::make_shared<std::string>();
        cmd->add_option("--batch", *batch, "task batch in the annotation store");
        cmd->callback([&ctx, batch] {
            json report;
            if (!batch->empty()) {
                AnnotationStore store(ctx.input("store"));
                const auto a = store.agreement(*batch);
                require(a.tasks > 0, "batch '" + *batch + "' has no complete tasks");
                report = {{"batch", *batch}, {"n", a.tasks}, {"p_o", *a.observed}, {"kappa", *a.kappa},
                          {"disagreements", a.disagreements}};
            } else {
                const auto la = read_lines(ctx.input("labels_a"));
                const auto lb = read_lines(ctx.input("labels_b"));
                std::vector<std::string> disagreements;
                for (std::size_t i = 0; i < std::min(la.size(), lb.size()); ++i) {
                    if (la[i] != lb[i]) disagreements.push_back(std::to_string(i + 1));
                }
                report = {{"n", la.size()}, {"p_o", observed_agreement(la, lb)}, {"kappa", cohen_kappa(la, lb)},
                          {"disagreements", disagreements}};
            }
            std::cout << "n " << report["n"].get<std::size_t>() << ", p_o " << fixed(report["p_o"].get<double>())
                      << ", kappa " << fixed(report["kappa"].get<double>()) << '\n';
            if (ctx.path("kappa_report")) write_json(ctx.output("kappa_report"), report);
        });
    }
}

} // namespace commentlab::cli
