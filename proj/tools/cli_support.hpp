#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <commentlab/commentlab.hpp>
#include <commentlab/config.hpp>

namespace commentlab::cli {

/// Raised when a command cannot find one of its inputs.
class MissingArtifact : public Error {
public:
    MissingArtifact(const std::string& name, const std::string& path)
        : Error(path.empty() ? "missing artifact '" + name + "': no path given (flag or config paths." + name + ")"
                             : "missing artifact '" + name + "': " + path + " does not exist") {}
};

/// Shared state: the loaded configuration plus per-command path flags.
/// A flag always wins over the config file.
struct Context {
    std::string config_path;
    PipelineConfig config;
    std::map<std::string, std::string> flag_paths;

    void load() {
        if (config_path.empty()) return;
        if (!std::filesystem::exists(config_path)) throw MissingArtifact("config", config_path);
        config = load_config(config_path);
    }

    std::optional<std::string> path(const std::string& name) const {
        if (auto it = flag_paths.find(name); it != flag_paths.end() && !it->second.empty()) return it->second;
        if (auto it = config.paths.find(name); it != config.paths.end() && !it->second.empty()) return it->second;
        return std::nullopt;
    }

    std::string input(const std::string& name) const {
        const auto p = path(name);
        if (!p) throw MissingArtifact(name, "");
        if (!std::filesystem::exists(*p)) throw MissingArtifact(name, *p);
        return *p;
    }

    std::optional<std::string> optional_input(const std::string& name) const {
        const auto p = path(name);
        if (p && !std::filesystem::exists(*p)) throw MissingArtifact(name, *p);
        return p;
    }

    std::string output(const std::string& name) const {
        const auto p = path(name);
        if (!p) throw Error("no output path for '" + name + "' (flag or config paths." + name + ")");
        const auto parent = std::filesystem::path(*p).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        return *p;
    }
};

/// Registers `--<flag>` bound to the named artifact path.
inline CLI::Option* path_flag(CLI::App* cmd, Context& ctx, const std::string& name, const std::string& help) {
    std::string flag = name;
    std::replace(flag.begin(), flag.end(), '_', '-');
    return cmd->add_option("--" + flag, ctx.flag_paths[name], help);
}

/// Applies a flag value over a config value only when the flag was given.
template <typename T>
void override_if(CLI::App* cmd, const std::string& flag, const T& value, T& target) {
    if (cmd->count(flag) > 0) target = value;
}

inline void write_json(const std::string& path, const json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

inline std::string fixed(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

void register_corpus_commands(CLI::App& app, Context& ctx);
void register_embed_commands(CLI::App& app, Context& ctx);
void register_langid_commands(CLI::App& app, Context& ctx);
void register_intent_commands(CLI::App& app, Context& ctx);
void register_hope_commands(CLI::App& app, Context& ctx);
void register_service_commands(CLI::App& app, Context& ctx);

} // namespace commentlab::cli
