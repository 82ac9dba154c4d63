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

#include "json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rapbench/error.hpp"

namespace rapbench::internal {

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kFormat, "corrupt file " + path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
  Require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path.string());
}

const Json& require_key(const Json& obj, std::string_view key, std::string_view context) {
  Require(obj.is_object(), ErrorCode::kFormat, std::string(context) + ": expected an object");
  auto it = obj.find(std::string(key));
  Require(it != obj.end(), ErrorCode::kFormat,
          std::string(context) + ": missing required key '" + std::string(key) + "'");
  return *it;
}

void check_envelope(const Json& doc, std::string_view format, int version) {
  const Json& f = require_key(doc, "format", format);
  Require(f.is_string() && f.get<std::string>() == format, ErrorCode::kFormat,
          "not a " + std::string(format) + " file");
  const Json& v = require_key(doc, "version", format);
  Require(v.is_number_integer(), ErrorCode::kFormat, std::string(format) + ": bad version field");
  Require(v.get<int>() == version, ErrorCode::kFormat,
          std::string(format) + ": unsupported version " + std::to_string(v.get<int>()) +
              " (expected " + std::to_string(version) + ")");
}

namespace {

// nlohmann/json writes doubles in shortest round-trip form and parses them
// with correct rounding, so decode(encode(x)) == x bit for bit.
Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(Json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

std::vector<double> vector_from_json(const Json& j, std::size_t n, std::string_view name) {
  Require(j.is_array() && j.size() == n, ErrorCode::kFormat,
          "model: '" + std::string(name) + "' must have " + std::to_string(n) + " entries");
  std::vector<double> v;
  v.reserve(n);
  for (const auto& x : j) {
    Require(x.is_number(), ErrorCode::kFormat, "model: non-numeric entry in '" + std::string(name) + "'");
    double d = x.get<double>();
    Require(std::isfinite(d), ErrorCode::kFormat, "model: non-finite entry in '" + std::string(name) + "'");
    v.push_back(d);
  }
  return v;
}

Matrix matrix_from_json(const Json& j, std::size_t rows, std::size_t cols, std::string_view name) {
  Require(j.is_array() && j.size() == rows, ErrorCode::kFormat,
          "model: '" + std::string(name) + "' must have " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto v = vector_from_json(j[r], cols, name);
    std::copy(v.begin(), v.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

Json model_to_json(const Model& model) {
  const auto& p = model.params;
  Json doc;
  doc["format"] = "rapbench-model";
  doc["version"] = kModelFormatVersion;
  doc["dims"] = {{"vocab", p.dims.vocab}, {"embed", p.dims.embed}, {"hidden", p.dims.hidden}};
  doc["vocabulary"] = model.vocab.tokens();
  doc["embeddings"] = matrix_to_json(p.embeddings);
  doc["w1"] = matrix_to_json(p.w1);
  doc["b1"] = p.b1;
  doc["w2"] = matrix_to_json(p.w2);
  doc["b2"] = p.b2;
  return doc;
}

Model model_from_json(const Json& doc) {
  check_envelope(doc, "rapbench-model", kModelFormatVersion);
  try {
    const Json& dims_j = require_key(doc, "dims", "model");
    Dims dims;
    dims.vocab = require_key(dims_j, "vocab", "model.dims").get<std::size_t>();
    dims.embed = require_key(dims_j, "embed", "model.dims").get<std::size_t>();
    dims.hidden = require_key(dims_j, "hidden", "model.dims").get<std::size_t>();
    Require(dims.vocab > 0 && dims.embed > 0 && dims.hidden > 0, ErrorCode::kFormat,
            "model: zero dimension");
    Vocabulary vocab(require_key(doc, "vocabulary", "model").get<std::vector<std::string>>());
    Require(vocab.size() == dims.vocab, ErrorCode::kFormat,
            "model: dims.vocab = " + std::to_string(dims.vocab) + " but vocabulary has " +
                std::to_string(vocab.size()) + " tokens");
    ModelParams p;
    p.dims = dims;
    p.embeddings = matrix_from_json(require_key(doc, "embeddings", "model"), dims.vocab, dims.embed, "embeddings");
    p.w1 = matrix_from_json(require_key(doc, "w1", "model"), dims.embed, dims.hidden, "w1");
    p.b1 = vector_from_json(require_key(doc, "b1", "model"), dims.hidden, "b1");
    p.w2 = matrix_from_json(require_key(doc, "w2", "model"), dims.hidden, kNumClasses, "w2");
    p.b2 = vector_from_json(require_key(doc, "b2", "model"), kNumClasses, "b2");
    return Model{std::move(vocab), std::move(p)};
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kFormat, std::string("model: ") + e.what());
  }
}

}  // namespace rapbench::internal
