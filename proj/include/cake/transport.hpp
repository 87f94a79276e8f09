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
//
// In-process network: lossless, ordered, deterministic. Deliveries are
// queued FIFO and drained by run_until_quiescent; handlers may enqueue
// further sends. Broadcast reaches every endpoint except the sender.

#ifndef CAKE_TRANSPORT_HPP
#define CAKE_TRANSPORT_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "cake/bytes.hpp"

namespace cake {

struct NetStats {
  uint64_t messages_sent = 0;
  uint64_t unicasts = 0;
  uint64_t broadcasts = 0;
  uint64_t payload_bytes_sent = 0;   // bytes per send call, once
  uint64_t delivered_messages = 0;
  uint64_t delivered_bytes = 0;      // bytes summed per receiving endpoint

  void reset() { *this = NetStats{}; }
};

struct EndpointStats {
  uint64_t sent_messages = 0;
  uint64_t sent_bytes = 0;
  uint64_t received_messages = 0;
  uint64_t received_bytes = 0;
};

class Network {
 public:
  using Handler =
      std::function<void(const std::string& from, const Bytes& data)>;

  explicit Network(uint64_t seed = 0) : seed_(seed) {}

  void register_endpoint(const std::string& name, Handler h);
  bool has_endpoint(const std::string& name) const;

  void unicast(const std::string& from, const std::string& to, Bytes data);
  void broadcast(const std::string& from, Bytes data);

  // Drains the delivery queue. Throws kNonTermination once step_limit
  // deliveries have been made without the queue emptying.
  void run_until_quiescent(uint64_t step_limit = 1000000);

  const NetStats& stats() const { return stats_; }
  void reset_stats();
  const std::map<std::string, EndpointStats>& endpoint_stats() const {
    return endpoint_stats_;
  }
  uint64_t seed() const { return seed_; }

 private:
  struct Delivery {
    std::string from;
    std::string to;
    std::shared_ptr<const Bytes> data;  // shared across broadcast fan-out
  };

  uint64_t seed_;
  std::map<std::string, Handler> endpoints_;
  std::deque<Delivery> queue_;
  NetStats stats_;
  std::map<std::string, EndpointStats> endpoint_stats_;
};

}  // namespace cake

#endif  // CAKE_TRANSPORT_HPP
