// Copyright 2026 The percabs Authors
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

#include "percabs/serialization.hpp"

#include <charconv>
#include <ostream>
#include <string>

#include "percabs/error.hpp"

namespace percabs::markov {

using nlohmann::json;

namespace {

json action_json(const ActionLabel& a) {
  json j = json::object();
  j["per"] = a.per ? json(*a.per) : json(nullptr);
  j["reach"] = a.reach ? json(*a.reach) : json(nullptr);
  return j;
}

ActionLabel action_from(const json& j) {
  ActionLabel a;
  if (j.contains("per") && !j.at("per").is_null()) a.per = j.at("per").get<int>();
  if (j.contains("reach") && !j.at("reach").is_null()) a.reach = j.at("reach").get<std::uint32_t>();
  return a;
}

template <typename Model, typename EdgeWriter>
json model_json(const Model& m, EdgeWriter write_edge) {
  json labels = json::array();
  for (const auto& set : m.all_labels()) labels.push_back(json(set));
  json rows = json::array();
  for (const auto& row : m.rows()) {
    json edges = json::array();
    for (const auto& e : row.edges) edges.push_back(write_edge(e));
    rows.push_back({{"state", row.state.index}, {"action", action_json(row.action)}, {"edges", std::move(edges)}});
  }
  return {{"states", m.num_states()}, {"initial", m.initial().index}, {"labels", std::move(labels)},
          {"rows", std::move(rows)}};
}

template <typename Row, typename EdgeReader>
std::vector<Row> rows_from(const json& j, EdgeReader read_edge) {
  std::vector<Row> rows;
  for (const auto& r : j.at("rows")) {
    Row row{StateId{r.at("state").get<std::uint32_t>()}, action_from(r.at("action")), {}};
    for (const auto& e : r.at("edges")) row.edges.push_back(read_edge(e));
    rows.push_back(std::move(row));
  }
  return rows;
}

Labels labels_from(const json& j) {
  Labels labels;
  if (!j.contains("labels")) return labels;
  for (const auto& set : j.at("labels")) labels.push_back(set.get<std::set<std::string>>());
  return labels;
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::Io, std::string("malformed model document: ") + e.what());
  }
}

}  // namespace

json to_json(const Mdp& m) {
  return model_json(m, [](const Transition& e) { return json{{"to", e.to.index}, {"lo", e.prob}, {"hi", e.prob}}; });
}

json to_json(const Imdp& m) {
  return model_json(m, [](const IntervalTransition& e) { return json{{"to", e.to.index}, {"lo", e.lo}, {"hi", e.hi}}; });
}

Mdp mdp_from_json(const json& j) {
  return guarded([&] {
    auto rows = rows_from<Mdp::Row>(j, [](const json& e) {
      const double lo = e.at("lo").get<double>();
      const double hi = e.at("hi").get<double>();
      if (lo != hi) fail(ErrorCode::IntervalOrder, "MDP edge with lo != hi");
      return Transition{StateId{e.at("to").get<std::uint32_t>()}, lo};
    });
    return Mdp(j.at("states").get<std::size_t>(), StateId{j.at("initial").get<std::uint32_t>()}, std::move(rows),
               labels_from(j));
  });
}

Imdp imdp_from_json(const json& j) {
  return guarded([&] {
    auto rows = rows_from<Imdp::Row>(j, [](const json& e) {
      return IntervalTransition{StateId{e.at("to").get<std::uint32_t>()}, e.at("lo").get<double>(),
                                e.at("hi").get<double>()};
    });
    return Imdp(j.at("states").get<std::size_t>(), StateId{j.at("initial").get<std::uint32_t>()}, std::move(rows),
                labels_from(j));
  });
}

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_listing(std::ostream& os, const Imdp& m) {
  os << "states " << m.num_states() << "\n";
  os << "initial " << m.initial().index << "\n";
  for (std::uint32_t s = 0; s < m.num_states(); ++s) {
    const auto& labels = m.labels(StateId{s});
    if (labels.empty()) continue;
    os << "label " << s;
    for (const auto& l : labels) os << ' ' << l;
    os << "\n";
  }
  for (const auto& row : m.rows()) {
    for (const auto& e : row.edges) {
      os << row.state.index << ' ' << to_string(row.action) << " -> " << e.to.index << " [" << shortest(e.lo) << ", "
         << shortest(e.hi) << "]\n";
    }
  }
}

}  // namespace percabs::markov
