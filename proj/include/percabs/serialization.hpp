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

#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "percabs/markov.hpp"

// JSON layout shared by both model kinds:
//   {"states": n, "initial": i, "labels": [[...], ...],
//    "rows": [{"state": s, "action": {"per": a|null, "reach": r|null},
//              "edges": [{"to": t, "lo": l, "hi": h}, ...]}, ...]}
// An MDP writes lo == hi. Keys come out sorted, so equal models produce equal
// bytes.

namespace percabs::markov {

nlohmann::json to_json(const Mdp& m);
nlohmann::json to_json(const Imdp& m);

/// Rejects documents whose edges carry lo != hi.
Mdp mdp_from_json(const nlohmann::json& j);
Imdp imdp_from_json(const nlohmann::json& j);

/// One line per edge: `state action -> successor [lo, hi]`, preceded by the
/// initial state and label table. Meant for eyeballing and for feeding other
/// model checkers by hand.
void write_listing(std::ostream& os, const Imdp& m);

}  // namespace percabs::markov
