#pragma once

#include <atomic>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "kgplan/knowledge.hpp"
#include "kgplan/llm.hpp"

namespace kgplan {

/// Global count of live-network client constructions. Offline test suites
/// assert this stays at zero.
inline std::atomic<size_t>& http_client_instances() {
    static std::atomic<size_t> n{0};
    return n;
}

namespace knowledge {

/// GET <base>/c/en/<key>?limit=N against a ConceptNet-compatible endpoint.
class HttpConceptNetTransport : public Transport {
public:
    explicit HttpConceptNetTransport(std::string base_url) : base_url_(std::move(base_url)) {
        ++http_client_instances();
    }

    json get(const ConceptKey& key, size_t limit) override {
        httplib::Client client(base_url_);
        client.set_read_timeout(20, 0);
        auto res = client.Get("/c/en/" + key + "?limit=" + std::to_string(limit));
        if (!res)
            throw TransportError("kg endpoint unreachable: " + base_url_);
        if (res->status != 200)
            throw TransportError("kg endpoint returned status " + std::to_string(res->status));
        json payload = json::parse(res->body, nullptr, false);
        if (payload.is_discarded())
            throw PayloadParseError("kg response is not JSON", res->body.substr(0, 200));
        return payload;
    }

    std::string kind() const override { return "http"; }

private:
    std::string base_url_;
};

}  // namespace knowledge

namespace llm {

/// Chat-completions backend speaking the common POST /v1/chat/completions
/// wire shape with system+user messages, temperature and n.
class HttpChatBackend : public ChatBackend {
public:
    HttpChatBackend(std::string base_url, std::string model, std::string api_key = {})
        : base_url_(std::move(base_url)), model_(std::move(model)), api_key_(std::move(api_key)) {
        ++http_client_instances();
    }

    std::vector<std::string> complete(const CompletionRequest& req) override {
        validate_request(req);
        json body = {
            {"model", model_},
            {"temperature", req.temperature},
            {"n", req.n},
            {"messages",
             json::array({json{{"role", "system"}, {"content", req.context.system_message}},
                          json{{"role", "user"}, {"content", req.context.user_message}}})},
        };
        httplib::Client client(base_url_);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
        if (!res) throw TransportError("chat endpoint unreachable: " + base_url_);
        if (res->status != 200)
            throw TransportError("chat endpoint returned status " + std::to_string(res->status) +
                                 ": " + res->body.substr(0, 200));
        json payload = json::parse(res->body, nullptr, false);
        if (payload.is_discarded() || !payload.contains("choices"))
            throw TransportError("chat response malformed: " + res->body.substr(0, 200));
        std::vector<std::string> out;
        for (const json& choice : payload.at("choices"))
            out.push_back(choice.at("message").at("content").get<std::string>());
        if (out.size() != req.n)
            throw TransportError("chat endpoint returned " + std::to_string(out.size()) +
                                 " completions, expected " + std::to_string(req.n));
        return out;
    }

    std::string name() const override { return "http:" + model_; }

private:
    std::string base_url_;
    std::string model_;
    std::string api_key_;
};

}  // namespace llm
}  // namespace kgplan
