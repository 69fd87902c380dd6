#include <csignal>
#include <iostream>

#include <commentlab/http_service.hpp>

#include "cli_support.hpp"

namespace commentlab::cli {

namespace {

httplib::Server* g_server = nullptr;

void stop_server(int) {
    if (g_server) g_server->stop();
}

} // namespace

void register_service_commands(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("serve-annotation", "Serve the annotation task API");
    path_flag(cmd, ctx, "store", "annotation store directory (must contain tasks.jsonl)");
    path_flag(cmd, ctx, "cluster_model", "cluster model whose audit samples back /api/clusters/{k}/sample");
    auto host = std::make_shared<std::string>();
    auto port = std::make_shared<int>(0);
    cmd->add_option("--host", *host, "bind address");
    cmd->add_option("--port", *port, "port (0 picks a free port)");
    cmd->callback([&ctx, cmd, host, port] {
        auto cfg = ctx.config.service;
        override_if(cmd, "--host", *host, cfg.host);
        override_if(cmd, "--port", *port, cfg.port);

        const auto dir = ctx.input("store");
        if (!std::filesystem::exists(std::filesystem::path(dir) / "tasks.jsonl")) {
            throw MissingArtifact("store", (std::filesystem::path(dir) / "tasks.jsonl").string());
        }
        AnnotationStore store(dir);
        std::optional<ClusterModel> clusters;
        if (auto c = ctx.optional_input("cluster_model")) clusters = load_cluster_model(*c);
        AnnotationService service(store, std::move(clusters));

        httplib::Server server;
        mount_annotation_api(server, service);
        int bound = cfg.port;
        if (cfg.port == 0) {
            bound = server.bind_to_any_port(cfg.host);
        } else if (!server.bind_to_port(cfg.host, cfg.port)) {
            throw Error("cannot bind " + cfg.host + ":" + std::to_string(cfg.port) + " (port busy?)");
        }
        if (bound < 0) throw Error("cannot bind " + cfg.host);
        g_server = &server;
        std::signal(SIGINT, stop_server);
        std::signal(SIGTERM, stop_server);
        std::cout << "serving " << store.tasks().size() << " tasks on http://" << cfg.host << ':' << bound << std::endl;
        server.listen_after_bind();
        g_server = nullptr;
    });
}

} // namespace commentlab::cli
