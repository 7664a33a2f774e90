#include "http_util.hpp"

#include <chrono>

#include <httplib.h>

#include "coxql/backend.hpp"

namespace coxql {

ParsedUrl parse_url(const std::string& url) {
    ParsedUrl out;
    std::string rest = url;
    if (rest.rfind("https://", 0) == 0) {
        out.https = true;
        out.port = 443;
        rest = rest.substr(8);
    } else if (rest.rfind("http://", 0) == 0) {
        rest = rest.substr(7);
    } else {
        throw BackendError(BackendError::Kind::Transport, "unsupported url scheme: " + url);
    }
    auto slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);
    auto colon = authority.find(':');
    if (colon == std::string::npos) {
        out.host = authority;
    } else {
        out.host = authority.substr(0, colon);
        out.port = std::stoi(authority.substr(colon + 1));
    }
    if (out.host.empty()) {
        throw BackendError(BackendError::Kind::Transport, "url has no host: " + url);
    }
    return out;
}

namespace {

template <typename Client>
nlohmann::json post_with(Client& cli, const ParsedUrl& url, const nlohmann::json& body,
                         double timeout_seconds, const std::string& bearer_token) {
    auto secs = static_cast<time_t>(timeout_seconds);
    auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
    auto res = cli.Post(url.path, headers, body.dump(), "application/json");
    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write) {
            throw BackendError(BackendError::Kind::Timeout,
                               "request timed out: " + httplib::to_string(err));
        }
        throw BackendError(BackendError::Kind::Transport,
                           "request failed: " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300) {
        throw BackendError(BackendError::Kind::HttpStatus,
                           "http status " + std::to_string(res->status), res->status);
    }
    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) {
        throw BackendError(BackendError::Kind::MalformedResponse, "response is not json");
    }
    return reply;
}

}  // namespace

nlohmann::json http_post_json(const std::string& url, const nlohmann::json& body,
                              double timeout_seconds, const std::string& bearer_token) {
    ParsedUrl parsed = parse_url(url);
    if (parsed.https) {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
        httplib::SSLClient cli(parsed.host, parsed.port);
        cli.enable_server_certificate_verification(true);
        return post_with(cli, parsed, body, timeout_seconds, bearer_token);
#else
        throw BackendError(BackendError::Kind::Transport, "built without https support");
#endif
    }
    httplib::Client cli(parsed.host, parsed.port);
    return post_with(cli, parsed, body, timeout_seconds, bearer_token);
}

}  // namespace coxql
