#include <iostream>

#include "cli_support.hpp"

namespace commentlab::cli {

namespace {

std::vector<Tokens> token_lists(const std::vector<TokenizedComment>& docs) {
    std::vector<Tokens> out;
    out.reserve(docs.size());
    for (const auto& d : docs) {
        if (!d.tokens.empty()) out.push_back(d.tokens);
    }
    return out;
}

} // namespace

void register_embed_commands(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("train-embed", "Train subword skip-gram embeddings on the tokenized corpus");
    path_flag(cmd, ctx, "tokenized", "tokenized comment JSONL");
    path_flag(cmd, ctx, "embed_model", "output: binary embedding model");
    path_flag(cmd, ctx, "embed_text", "output: optional plain-text vector export");

    struct Flags {
        std::uint32_t dim = 0, epochs = 0, min_count = 0, threads = 0;
        std::uint64_t buckets = 0, seed = 0;
    };
    auto f = std::make_shared<Flags>();
    cmd->add_option("--dim", f->dim, "vector dimension");
    cmd->add_option("--epochs", f->epochs, "training epochs");
    cmd->add_option("--min-count", f->min_count, "vocabulary frequency threshold");
    cmd->add_option("--buckets", f->buckets, "subword hash buckets");
    cmd->add_option("--threads", f->threads, "worker threads (1 = deterministic)");
    cmd->add_option("--seed", f->seed, "training seed");

    cmd->callback([&ctx, cmd, f] {
        auto cfg = ctx.config.embedding;
        override_if(cmd, "--dim", f->dim, cfg.dim);
        override_if(cmd, "--epochs", f->epochs, cfg.epochs);
        override_if(cmd, "--min-count", f->min_count, cfg.min_count);
        override_if(cmd, "--buckets", f->buckets, cfg.bucket_count);
        override_if(cmd, "--threads", f->threads, cfg.threads);
        override_if(cmd, "--seed", f->seed, cfg.seed);

        const auto corpus = token_lists(load_tokenized(ctx.input("tokenized")));
        TrainingStats stats;
        auto model = train_embeddings(corpus, cfg, &stats);
        model.discard_output();
        model.save(ctx.output("embed_model"));
        if (ctx.path("embed_text")) model.export_text(ctx.output("embed_text"));

        std::cout << "vocabulary " << model.vocab_size() << " tokens, dim " << cfg.dim << ", " << stats.pairs
                  << " training pairs, seed " << cfg.seed << '\n';
        for (std::size_t e = 0; e < stats.epoch_loss.size(); ++e) {
            std::cout << "  epoch " << e + 1 << " mean loss " << fixed(stats.epoch_loss[e]) << '\n';
        }
    });
}

} // namespace commentlab::cli
