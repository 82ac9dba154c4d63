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

#ifndef RAPBENCH_MODEL_HPP_
#define RAPBENCH_MODEL_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <vector>

#include "rapbench/corpus.hpp"

namespace rapbench {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline constexpr std::size_t kNumClasses = 2;

struct Dims {
  std::size_t vocab = 0;
  std::size_t embed = 16;
  std::size_t hidden = 32;

  bool operator==(const Dims&) const = default;
};

// Storage shared by parameters and their gradients:
//   embeddings V x d, w1 d x h, b1 h, w2 h x 2, b2 2.
struct ParamTensors {
  Dims dims;
  Matrix embeddings;
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;

  // Zero-filled tensors of the given shape.
  static ParamTensors zeros(const Dims& dims);

  bool same_shape(const ParamTensors& other) const;
  bool operator==(const ParamTensors&) const = default;

  // Visits every scalar in a fixed order (embeddings, w1, b1, w2, b2).
  template <typename F>
  void for_each(F&& f) {
    for (double& v : embeddings.data()) f(v);
    for (double& v : w1.data()) f(v);
    for (double& v : b1) f(v);
    for (double& v : w2.data()) f(v);
    for (double& v : b2) f(v);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<ParamTensors*>(this)->for_each([&](double& v) { f(static_cast<const double&>(v)); });
  }
  std::size_t scalar_count() const;
};

struct ModelParams : ParamTensors {
  ModelParams() = default;
  explicit ModelParams(ParamTensors t) : ParamTensors(std::move(t)) {}
};

struct Gradients : ParamTensors {
  Gradients() = default;
  explicit Gradients(ParamTensors t) : ParamTensors(std::move(t)) {}

  // this += scale * other
  void add_scaled(const Gradients& other, double scale);
};

// Which slices an update may touch.
struct ParamMask {
  std::set<int> embedding_rows;
  bool head_updatable = false;

  static ParamMask everything(const Dims& dims);
  static ParamMask rows_only(std::set<int> rows) { return {std::move(rows), false}; }
};

struct TrainConfig {
  std::size_t epochs = 3;
  double learning_rate = 0.1;
  std::size_t batch_size = 16;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

using Probabilities = std::array<double, kNumClasses>;

// Uniform in [-0.1, 0.1] for weights, zero biases.
ModelParams init_params(const Dims& dims, std::uint64_t seed);
ModelParams zero_params(const Dims& dims);

Probabilities forward(const ModelParams& params, std::span<const int> token_ids);
double loss(const ModelParams& params, std::span<const int> token_ids, Label label);
// Gradient of the cross-entropy loss.
Gradients backward(const ModelParams& params, std::span<const int> token_ids, Label label);
// Gradient of the class probability p(cls | tokens).
Gradients prob_gradient(const ModelParams& params, std::span<const int> token_ids, Label cls);

ModelParams sgd_step(const ModelParams& params, const Gradients& grads, const ParamMask& mask,
                     double learning_rate);

// Argmax with ties resolved to label 0.
Label predict(const ModelParams& params, std::span<const int> token_ids);
double prob_of(const ModelParams& params, std::span<const int> token_ids, Label label);

// Parameters together with the vocabulary that assigns their row ids.
struct Model {
  Vocabulary vocab;
  ModelParams params;

  std::vector<int> encode(const Tokens& tokens) const { return vocab.encode(tokens); }
  Probabilities forward(const Tokens& tokens) const;
  Label predict(const Tokens& tokens) const;
  double prob_of(const Tokens& tokens, Label label) const;

  // Ids of words that must already be in the vocabulary.
  std::set<int> require_ids(const std::vector<std::string>& words, std::string_view role) const;
};

inline constexpr int kModelFormatVersion = 1;

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace rapbench

#endif  // RAPBENCH_MODEL_HPP_
