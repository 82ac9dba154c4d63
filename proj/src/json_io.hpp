/* Copyright 2026 The rapbench Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Internal JSON helpers shared by the model, detector and report files.

#ifndef RAPBENCH_SRC_JSON_IO_HPP_
#define RAPBENCH_SRC_JSON_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "rapbench/model.hpp"

namespace rapbench::internal {

using Json = nlohmann::json;

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const Json& doc, const std::filesystem::path& path);

// Fetches a required key, failing with a message that names it.
const Json& require_key(const Json& obj, std::string_view key, std::string_view context);

// Checks the "format"/"version" envelope.
void check_envelope(const Json& doc, std::string_view format, int version);

Json model_to_json(const Model& model);
Model model_from_json(const Json& doc);

}  // namespace rapbench::internal

#endif  // RAPBENCH_SRC_JSON_IO_HPP_
