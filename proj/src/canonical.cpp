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

#include "dbcabac/canonical.hpp"

#include <stdexcept>

namespace dbcabac {

std::string canonical(const Document& doc) {
  return doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

Document parse_document(std::string_view bytes) {
  try {
    return Document::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed document: ") + e.what());
  }
}

Document parse_canonical(std::string_view bytes) {
  Document doc = parse_document(bytes);
  std::string round;
  try {
    round = canonical(doc);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed document: ") + e.what());
  }
  if (round != bytes) throw std::invalid_argument("document is not in canonical form");
  return doc;
}

}  // namespace dbcabac
