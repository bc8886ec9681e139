// SPDX-License-Identifier: Apache-2.0
#include "jointrl/remote.hpp"

#include <cmath>
#include <random>
#include <regex>

#include <httplib.h>

#include "jointrl/text.hpp"

namespace jointrl {

nlohmann::json to_json(const RemoteRequest& request) {
  nlohmann::json record{{"agent_id", request.agent_id},
                        {"context", request.context},
                        {"n", request.n},
                        {"temperature", request.temperature}};
  if (request.seed) record["seed"] = *request.seed;
  return record;
}

RemoteRequest remote_request_from_json(const nlohmann::json& record) {
  RemoteRequest request;
  request.agent_id = record.at("agent_id").get<std::string>();
  request.context = record.at("context").get<std::string>();
  request.n = record.at("n").get<int>();
  request.temperature = record.at("temperature").get<double>();
  if (record.contains("seed") && !record["seed"].is_null()) {
    request.seed = record["seed"].get<std::uint64_t>();
  }
  return request;
}

std::string encode_response(const std::vector<RemoteCandidate>& candidates) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& candidate : candidates) {
    list.push_back({{"text", candidate.text}, {"logprob", candidate.logprob}});
  }
  return nlohmann::json{{"candidates", list}}.dump();
}

std::vector<RemoteCandidate> decode_response(const std::string& payload,
                                             int expected) {
  auto record = nlohmann::json::parse(payload, nullptr, false);
  if (record.is_discarded() || !record.is_object()) {
    throw ProtocolError("malformed response: not a JSON object", payload);
  }
  if (record.contains("error")) {
    throw ProtocolError("server error: " + record["error"].dump(), payload);
  }
  if (!record.contains("candidates") || !record["candidates"].is_array()) {
    throw ProtocolError("malformed response: missing candidates", payload);
  }
  std::vector<RemoteCandidate> candidates;
  for (const auto& item : record["candidates"]) {
    if (!item.is_object() || !item.contains("text") || !item["text"].is_string() ||
        !item.contains("logprob") || !item["logprob"].is_number()) {
      throw ProtocolError("malformed response: bad candidate", payload);
    }
    RemoteCandidate candidate{item["text"].get<std::string>(),
                              item["logprob"].get<double>()};
    if (!std::isfinite(candidate.logprob) || candidate.logprob > 0.0) {
      throw ProtocolError("malformed response: logprob must be finite and <= 0",
                          payload);
    }
    candidates.push_back(std::move(candidate));
  }
  if (static_cast<int>(candidates.size()) != expected) {
    throw ProtocolError("candidate count mismatch: expected " +
                            std::to_string(expected) + ", got " +
                            std::to_string(candidates.size()),
                        payload);
  }
  return candidates;
}

HttpTransport::HttpTransport(std::string host, int port, std::string path,
                             std::chrono::milliseconds timeout)
    : host_(std::move(host)),
      port_(port),
      path_(std::move(path)),
      timeout_(timeout) {}

std::shared_ptr<HttpTransport> HttpTransport::from_url(const std::string& url) {
  static const std::regex pattern(R"(^http://([^:/]+):(\d+)(/.*)?$)");
  std::smatch match;
  if (!std::regex_match(url, match, pattern)) {
    throw ConfigError("remote_endpoint must look like http://host:port/path, got '" +
                      url + "'");
  }
  return std::make_shared<HttpTransport>(
      match[1].str(), std::stoi(match[2].str()),
      match[3].matched ? match[3].str() : std::string("/sample"));
}

std::string HttpTransport::exchange(const std::string& request_body) {
  httplib::Client client(host_, port_);
  const auto seconds = timeout_.count() / 1000;
  const auto micros = (timeout_.count() % 1000) * 1000;
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  auto result = client.Post(path_, request_body, "application/json");
  if (!result) {
    throw TransportError("transport failure talking to " + host_ + ":" +
                         std::to_string(port_) + ": " +
                         httplib::to_string(result.error()));
  }
  if (result->status >= 500) {
    throw TransportError("server returned HTTP " + std::to_string(result->status));
  }
  if (result->status != 200) {
    throw ProtocolError("server returned HTTP " + std::to_string(result->status),
                        result->body);
  }
  return result->body;
}

std::vector<RemoteCandidate> RemotePolicyClient::request(
    const RemoteRequest& request) const {
  const std::string body = to_json(request).dump();
  auto backoff = retry_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    ++attempts_;
    try {
      return decode_response(transport_->exchange(body), request.n);
    } catch (const TransportError&) {
      if (attempt >= retry_.max_attempts) throw;
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
}

std::string handle_request(const RequestHandler& handler,
                           const std::string& body) {
  auto record = nlohmann::json::parse(body, nullptr, false);
  if (record.is_discarded()) {
    return nlohmann::json{{"error", "request is not JSON"}}.dump();
  }
  try {
    return encode_response(handler(remote_request_from_json(record)));
  } catch (const std::exception& e) {
    return nlohmann::json{{"error", e.what()}}.dump();
  }
}

RequestHandler uniform_choice_handler(std::vector<std::string> texts) {
  if (texts.empty()) throw Error("uniform_choice_handler needs texts");
  return [texts = std::move(texts)](const RemoteRequest& request) {
    std::mt19937_64 rng(request.seed.value_or(0));
    const double logprob = -std::log(static_cast<double>(texts.size()));
    std::vector<RemoteCandidate> out;
    for (int i = 0; i < request.n; ++i) {
      out.push_back({texts[rng() % texts.size()], logprob});
    }
    return out;
  };
}

MockPolicyServer::MockPolicyServer(RequestHandler handler)
    : handler_(std::move(handler)), server_(std::make_unique<httplib::Server>()) {
  server_->Post("/sample", [this](const httplib::Request& req,
                                  httplib::Response& res) {
    ++served_;
    res.set_content(handle_request(handler_, req.body), "application/json");
  });
}

MockPolicyServer::~MockPolicyServer() { stop(); }

int MockPolicyServer::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw TransportError("mock server could not bind " + host);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void MockPolicyServer::stop() {
  if (thread_.joinable()) {
    server_->stop();
    thread_.join();
  }
}

}  // namespace jointrl
