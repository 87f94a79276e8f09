// Copyright 2026 The cakekm Authors
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

#include "cake/transport.hpp"

#include "cake/errors.hpp"

namespace cake {

void Network::register_endpoint(const std::string& name, Handler h) {
  endpoints_[name] = std::move(h);
  endpoint_stats_.try_emplace(name);
}

bool Network::has_endpoint(const std::string& name) const {
  return endpoints_.count(name) > 0;
}

void Network::unicast(const std::string& from, const std::string& to,
                      Bytes data) {
  if (!has_endpoint(from)) fail(Err::kUnknownEndpoint, "unicast from " + from);
  if (!has_endpoint(to)) fail(Err::kUnknownEndpoint, "unicast to " + to);
  auto payload = std::make_shared<const Bytes>(std::move(data));
  stats_.messages_sent += 1;
  stats_.unicasts += 1;
  stats_.payload_bytes_sent += payload->size();
  auto& es = endpoint_stats_[from];
  es.sent_messages += 1;
  es.sent_bytes += payload->size();
  queue_.push_back(Delivery{from, to, std::move(payload)});
}

void Network::broadcast(const std::string& from, Bytes data) {
  if (!has_endpoint(from)) {
    fail(Err::kUnknownEndpoint, "broadcast from " + from);
  }
  auto payload = std::make_shared<const Bytes>(std::move(data));
  stats_.messages_sent += 1;
  stats_.broadcasts += 1;
  stats_.payload_bytes_sent += payload->size();
  auto& es = endpoint_stats_[from];
  es.sent_messages += 1;
  es.sent_bytes += payload->size();
  // Endpoint map order makes the fan-out order deterministic.
  for (const auto& [name, handler] : endpoints_) {
    (void)handler;
    if (name == from) continue;
    queue_.push_back(Delivery{from, name, payload});
  }
}

void Network::run_until_quiescent(uint64_t step_limit) {
  uint64_t steps = 0;
  while (!queue_.empty()) {
    if (++steps > step_limit) {
      fail(Err::kNonTermination, "delivery loop exceeded the step limit");
    }
    Delivery d = std::move(queue_.front());
    queue_.pop_front();
    auto it = endpoints_.find(d.to);
    if (it == endpoints_.end()) continue;  // endpoint left after enqueue
    stats_.delivered_messages += 1;
    stats_.delivered_bytes += d.data->size();
    auto& es = endpoint_stats_[d.to];
    es.received_messages += 1;
    es.received_bytes += d.data->size();
    it->second(d.from, *d.data);
  }
}

void Network::reset_stats() {
  stats_.reset();
  endpoint_stats_.clear();
  for (const auto& [name, handler] : endpoints_) {
    (void)handler;
    endpoint_stats_.try_emplace(name);
  }
}

}  // namespace cake
