#pragma once

#include <map>
#include <string>

#include <httplib.h>

#include "annotation.hpp"

namespace commentlab {

/// Routes every /api/ request on `server` to `service`. Writes are serialised
/// by the store.
inline void mount_annotation_api(httplib::Server& server, AnnotationService& service) {
    auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> query;
        for (const auto& [k, v] : req.params) query.emplace(k, v);
        const auto r = service.handle(req.method, req.path, query, req.body);
        res.status = r.status;
        if (!r.body.empty()) res.set_content(r.body, r.content_type);
    };
    server.Get(R"(/api/.*)", forward);
    server.Post(R"(/api/.*)", forward);
}

} // namespace commentlab
