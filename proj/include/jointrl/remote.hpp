// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_REMOTE_HPP_
#define JOINTRL_REMOTE_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "jointrl/core_model.hpp"

namespace httplib {
class Server;
}

namespace jointrl {

// Remote sampling protocol. Requests and responses are JSON objects:
//   request  {"agent_id", "context", "n", "temperature", "seed"?}
//   response {"candidates": [{"text", "logprob"}, ...]}
// Candidate order is significant and must be preserved by servers.
struct RemoteRequest {
  AgentId agent_id;
  std::string context;
  int n = 1;
  double temperature = 1.0;
  std::optional<std::uint64_t> seed;

  bool operator==(const RemoteRequest&) const = default;
};

struct RemoteCandidate {
  std::string text;
  double logprob = 0.0;

  bool operator==(const RemoteCandidate&) const = default;
};

nlohmann::json to_json(const RemoteRequest& request);
RemoteRequest remote_request_from_json(const nlohmann::json& record);
std::string encode_response(const std::vector<RemoteCandidate>& candidates);
// Throws ProtocolError on malformed payloads or a candidate count other than
// `expected`.
std::vector<RemoteCandidate> decode_response(const std::string& payload,
                                             int expected);

// Connection failures and timeouts; safe to retry.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Contract violations by the server; never retried.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string raw_payload)
      : Error(what), raw_payload_(std::move(raw_payload)) {}
  const std::string& raw_payload() const { return raw_payload_; }

 private:
  std::string raw_payload_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string exchange(const std::string& request_body) = 0;
};

class HttpTransport : public Transport {
 public:
  HttpTransport(std::string host, int port, std::string path = "/sample",
                std::chrono::milliseconds timeout = std::chrono::seconds(5));
  // Accepts "http://host:port/path".
  static std::shared_ptr<HttpTransport> from_url(const std::string& url);

  std::string exchange(const std::string& request_body) override;

 private:
  std::string host_;
  int port_;
  std::string path_;
  std::chrono::milliseconds timeout_;
};

// Calls a handler in-process; exercises the full encode/decode path without
// sockets.
class LoopbackTransport : public Transport {
 public:
  explicit LoopbackTransport(std::function<std::string(const std::string&)> handler)
      : handler_(std::move(handler)) {}
  std::string exchange(const std::string& request_body) override {
    return handler_(request_body);
  }

 private:
  std::function<std::string(const std::string&)> handler_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{20};
};

class RemotePolicyClient {
 public:
  explicit RemotePolicyClient(std::shared_ptr<Transport> transport,
                              RetryPolicy retry = {})
      : transport_(std::move(transport)), retry_(retry) {}

  std::vector<RemoteCandidate> request(const RemoteRequest& request) const;

  std::int64_t attempts() const { return attempts_.load(); }

 private:
  std::shared_ptr<Transport> transport_;
  RetryPolicy retry_;
  mutable std::atomic<std::int64_t> attempts_{0};
};

using RequestHandler =
    std::function<std::vector<RemoteCandidate>(const RemoteRequest&)>;

// Server-side dispatch shared by the mock server and loopback transports.
std::string handle_request(const RequestHandler& handler,
                           const std::string& body);

// Seeded uniform choice over fixed texts; logprob = -log(|texts|).
RequestHandler uniform_choice_handler(std::vector<std::string> texts);

class MockPolicyServer {
 public:
  explicit MockPolicyServer(RequestHandler handler);
  ~MockPolicyServer();
  MockPolicyServer(const MockPolicyServer&) = delete;
  MockPolicyServer& operator=(const MockPolicyServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();
  int port() const { return port_; }
  std::int64_t requests_served() const { return served_.load(); }

 private:
  RequestHandler handler_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
  std::atomic<std::int64_t> served_{0};
};

}  // namespace jointrl

#endif  // JOINTRL_REMOTE_HPP_
