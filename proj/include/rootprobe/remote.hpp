// Copyright 2026 The RootProbe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ROOTPROBE_REMOTE_HPP_
#define ROOTPROBE_REMOTE_HPP_

#include <algorithm>
#include <chrono>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/models.hpp"

namespace rootprobe {

// Wire format shared by the client and the test servers.
namespace wire {

inline std::string encode_request(std::string_view question, std::string_view context) {
  nlohmann::ordered_json j;
  j["question"] = question;
  j["context"] = context;
  return j.dump();
}

inline nlohmann::ordered_json encode_response(const AnswerPrediction& p) {
  nlohmann::ordered_json j;
  j["answer"] = {{"text", p.answer_text},
                 {"start_token", p.start_token},
                 {"end_token", p.end_token}};
  j["context_tokens"] = p.context_tokens;
  j["start_distribution"] = p.start_distribution;
  return j;
}

// Parses and validates a /predict response body.
inline AnswerPrediction decode_response(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("response is not valid JSON: ") + e.what());
  }
  AnswerPrediction p;
  try {
    const auto& answer = j.at("answer");
    p.answer_text = answer.at("text").get<std::string>();
    const auto start = answer.at("start_token").get<long long>();
    const auto end = answer.at("end_token").get<long long>();
    if (start < 0 || end < 0) throw ProtocolError("index check failed: negative token index");
    p.start_token = static_cast<std::size_t>(start);
    p.end_token = static_cast<std::size_t>(end);
    p.context_tokens = j.at("context_tokens").get<std::vector<std::string>>();
    p.start_distribution = j.at("start_distribution").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
  if (auto failed = check_prediction(p)) throw ProtocolError("validation failed: " + *failed);
  return p;
}

}  // namespace wire

// Client for an answerer served over HTTP:
//   POST /predict {"question", "context"} -> prediction JSON
//   GET  /health -> {"status": "ok"}
class RemoteAnswerer final : public Answerer {
 public:
  static constexpr int kAttempts = 3;

  explicit RemoteAnswerer(std::string url, int max_inflight = 1)
      : max_inflight_(max_inflight),
        slots_(std::make_unique<std::counting_semaphore<>>(std::max(1, max_inflight))) {
    if (max_inflight < 1) throw ContractViolation("remote answerer: max_inflight must be >= 1");
    split_url(url);
  }

  AnswererKind kind() const override { return AnswererKind::kRemote; }
  int max_inflight() const override { return max_inflight_; }
  const std::string& base() const { return base_; }

  void health() const {
    auto res = request([&](httplib::Client& c) { return c.Get(prefix_ + "/health"); });
    if (res->status != 200)
      throw ProtocolError("health check returned HTTP " + std::to_string(res->status));
    try {
      auto j = nlohmann::json::parse(res->body);
      if (j.at("status").get<std::string>() != "ok")
        throw ProtocolError("health check status is not \"ok\"");
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("health check body malformed: ") + e.what());
    }
  }

  AnswerPrediction predict_unchecked(std::string_view question,
                                     std::string_view context) const override {
    const std::string body = wire::encode_request(question, context);
    auto res = request([&](httplib::Client& c) {
      return c.Post(prefix_ + "/predict", body, "application/json");
    });
    if (res->status != 200)
      throw ModelError("predict returned HTTP " + std::to_string(res->status) + ": " + res->body,
                       res->status >= 500);
    return wire::decode_response(res->body);
  }

 private:
  void split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ContractViolation("remote answerer: bad URL " + url);
    const auto path = url.find('/', scheme + 3);
    base_ = url.substr(0, path);
    prefix_ = path == std::string::npos ? "" : url.substr(path);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  template <typename Call>
  httplib::Result request(Call&& call) const {
    slots_->acquire();
    struct Release {
      std::counting_semaphore<>* s;
      ~Release() { s->release(); }
    } release{slots_.get()};

    std::string last_error;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 << attempt));
      httplib::Client client(base_);
      client.set_connection_timeout(5);
      client.set_read_timeout(120);
      auto res = call(client);
      if (res) return res;
      last_error = httplib::to_string(res.error());
    }
    throw ModelError("remote answerer " + base_ + ": transport failure: " + last_error,
                     /*retryable=*/true);
  }

  int max_inflight_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
  std::string base_;
  std::string prefix_;
};

}  // namespace rootprobe

#endif  // ROOTPROBE_REMOTE_HPP_
