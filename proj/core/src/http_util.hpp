#pragma once

// Private helper shared by the completion and embedding HTTP clients.

#include <string>

#include <nlohmann/json.hpp>

namespace coxql {

struct ParsedUrl {
    bool https = false;
    std::string host;
    int port = 80;
    std::string path = "/";
};

ParsedUrl parse_url(const std::string& url);

/// POST `body` as JSON and parse the JSON reply. Throws BackendError on
/// transport failures, non-2xx statuses, and unparseable replies.
nlohmann::json http_post_json(const std::string& url, const nlohmann::json& body,
                              double timeout_seconds, const std::string& bearer_token);

}  // namespace coxql
