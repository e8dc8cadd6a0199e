// Copyright 2026 The dbcabac Authors.
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

#include <string>
#include <string_view>

#include "json.hpp"

namespace dbcabac {

using Document = nlohmann::json;

// Canonical document form: keys sorted lexicographically (bytewise), no
// insignificant whitespace, integers only. This is the byte string that gets
// hashed and signed everywhere in the project.
std::string canonical(const Document& doc);

// Parses and checks that the input is already in canonical form.
// Throws std::invalid_argument otherwise.
Document parse_canonical(std::string_view bytes);

// Lenient parse; throws std::invalid_argument on malformed input.
Document parse_document(std::string_view bytes);

}  // namespace dbcabac
