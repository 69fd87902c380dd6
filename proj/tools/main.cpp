#include <iostream>

#include "cli_support.hpp"

int main(int argc, char** argv) {
    using namespace commentlab::cli;
    CLI::App app{"commentlab: multilingual comment analytics"};
    app.require_subcommand(1);
    Context ctx;
    app.add_option("-c,--config", ctx.config_path, "JSON configuration file");
    app.parse_complete_callback([&] { ctx.load(); });

    register_corpus_commands(app, ctx);
    register_embed_commands(app, ctx);
    register_langid_commands(app, ctx);
    register_intent_commands(app, ctx);
    register_hope_commands(app, ctx);
    register_service_commands(app, ctx);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const MissingArtifact& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const commentlab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
