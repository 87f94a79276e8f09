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

#include <string>
#include <vector>

#include "cake/errors.hpp"
#include "doctest.h"

using namespace cake;

TEST_CASE("unicast delivers in FIFO order") {
  Network net;
  std::vector<uint8_t> seen;
  net.register_endpoint("a", [](const std::string&, const Bytes&) {});
  net.register_endpoint("b", [&](const std::string& from, const Bytes& d) {
    CHECK(from == "a");
    seen.push_back(d.at(0));
  });

  net.unicast("a", "b", {1});
  net.unicast("a", "b", {2});
  net.unicast("a", "b", {3});
  CHECK(seen.empty());  // nothing delivered until the queue is drained
  net.run_until_quiescent();
  CHECK(seen == std::vector<uint8_t>{1, 2, 3});
}

TEST_CASE("broadcast reaches everyone except the sender") {
  Network net;
  std::map<std::string, int> hits;
  for (std::string name : {"a", "b", "c", "d"}) {
    net.register_endpoint(name, [&hits, name](const std::string&,
                                              const Bytes&) { hits[name]++; });
  }
  net.broadcast("b", {0xaa, 0xbb});
  net.run_until_quiescent();
  CHECK(hits["a"] == 1);
  CHECK(hits["b"] == 0);
  CHECK(hits["c"] == 1);
  CHECK(hits["d"] == 1);
}

TEST_CASE("stats account for every byte once per receiver") {
  Network net;
  for (std::string name : {"a", "b", "c"}) {
    net.register_endpoint(name, [](const std::string&, const Bytes&) {});
  }
  net.unicast("a", "b", Bytes(10, 0));
  net.broadcast("a", Bytes(100, 0));
  net.run_until_quiescent();

  const NetStats& s = net.stats();
  CHECK(s.messages_sent == 2);
  CHECK(s.unicasts == 1);
  CHECK(s.broadcasts == 1);
  CHECK(s.payload_bytes_sent == 110);   // per send call
  CHECK(s.delivered_messages == 3);     // b gets 2, c gets 1
  CHECK(s.delivered_bytes == 210);      // broadcast counted per receiver

  const auto& es = net.endpoint_stats();
  CHECK(es.at("a").sent_messages == 2);
  CHECK(es.at("a").sent_bytes == 110);
  CHECK(es.at("a").received_messages == 0);
  CHECK(es.at("b").received_messages == 2);
  CHECK(es.at("b").received_bytes == 110);
  CHECK(es.at("c").received_messages == 1);
  CHECK(es.at("c").received_bytes == 100);

  net.reset_stats();
  CHECK(net.stats().messages_sent == 0);
}

TEST_CASE("unknown endpoints are rejected") {
  Network net;
  net.register_endpoint("a", [](const std::string&, const Bytes&) {});
  CHECK_THROWS_AS(net.unicast("a", "ghost", {1}), Error);
  CHECK_THROWS_AS(net.unicast("ghost", "a", {1}), Error);
  CHECK_THROWS_AS(net.broadcast("ghost", {1}), Error);
  CHECK(net.has_endpoint("a"));
  CHECK_FALSE(net.has_endpoint("ghost"));
}

TEST_CASE("handlers may send; ping-pong without a base case is caught") {
  Network net;
  net.register_endpoint("ping", [&](const std::string& from, const Bytes& d) {
    net.unicast("ping", from, d);
  });
  net.register_endpoint("pong", [&](const std::string& from, const Bytes& d) {
    net.unicast("pong", from, d);
  });
  net.unicast("ping", "pong", {7});
  CHECK_THROWS_AS(net.run_until_quiescent(200), Error);
}

TEST_CASE("bounded handler chains terminate") {
  Network net;
  int depth = 0;
  net.register_endpoint("relay", [&](const std::string&, const Bytes& d) {
    if (d.at(0) > 0) {
      depth++;
      net.unicast("relay", "sink", {static_cast<uint8_t>(d.at(0) - 1)});
    }
  });
  net.register_endpoint("sink", [&](const std::string&, const Bytes& d) {
    net.unicast("sink", "relay", d);
  });
  net.unicast("sink", "relay", {5});
  net.run_until_quiescent();
  CHECK(depth == 5);
}
