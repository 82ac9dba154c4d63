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

#include "rapbench/model.hpp"

#include <algorithm>
#include <cmath>

#include "json_io.hpp"
#include "rapbench/error.hpp"

namespace rapbench {

ParamTensors ParamTensors::zeros(const Dims& dims) {
  ParamTensors t;
  t.dims = dims;
  t.embeddings = Matrix(dims.vocab, dims.embed);
  t.w1 = Matrix(dims.embed, dims.hidden);
  t.b1.assign(dims.hidden, 0.0);
  t.w2 = Matrix(dims.hidden, kNumClasses);
  t.b2.assign(kNumClasses, 0.0);
  return t;
}

bool ParamTensors::same_shape(const ParamTensors& o) const {
  return dims == o.dims && embeddings.rows() == o.embeddings.rows() &&
         embeddings.cols() == o.embeddings.cols() && w1.rows() == o.w1.rows() &&
         w1.cols() == o.w1.cols() && b1.size() == o.b1.size() && w2.rows() == o.w2.rows() &&
         w2.cols() == o.w2.cols() && b2.size() == o.b2.size();
}

std::size_t ParamTensors::scalar_count() const {
  return embeddings.data().size() + w1.data().size() + b1.size() + w2.data().size() + b2.size();
}

void Gradients::add_scaled(const Gradients& other, double scale) {
  Require(same_shape(other), ErrorCode::kInvalidArgument, "add_scaled: shape mismatch");
  auto axpy = [scale](std::vector<double>& y, const std::vector<double>& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += scale * x[i];
  };
  axpy(embeddings.data(), other.embeddings.data());
  axpy(w1.data(), other.w1.data());
  axpy(b1, other.b1);
  axpy(w2.data(), other.w2.data());
  axpy(b2, other.b2);
}

ParamMask ParamMask::everything(const Dims& dims) {
  ParamMask m;
  for (std::size_t r = 0; r < dims.vocab; ++r) m.embedding_rows.insert(static_cast<int>(r));
  m.head_updatable = true;
  return m;
}

void TrainConfig::validate() const {
  Require(epochs >= 1, ErrorCode::kInvalidArgument, "epochs must be >= 1");
  Require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCode::kInvalidArgument,
          "learning_rate must be > 0");
  Require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch_size must be >= 1");
}

ModelParams init_params(const Dims& dims, std::uint64_t seed) {
  Require(dims.vocab >= 1 && dims.embed >= 1 && dims.hidden >= 1, ErrorCode::kInvalidArgument,
          "init_params: zero dimension");
  ModelParams p(ParamTensors::zeros(dims));
  Rng rng(seed);
  for (double& v : p.embeddings.data()) v = rng.uniform(-0.1, 0.1);
  for (double& v : p.w1.data()) v = rng.uniform(-0.1, 0.1);
  for (double& v : p.w2.data()) v = rng.uniform(-0.1, 0.1);
  return p;
}

ModelParams zero_params(const Dims& dims) {
  Require(dims.vocab >= 1 && dims.embed >= 1 && dims.hidden >= 1, ErrorCode::kInvalidArgument,
          "zero_params: zero dimension");
  return ModelParams(ParamTensors::zeros(dims));
}

namespace {

struct Activations {
  std::vector<double> pooled;
  std::vector<double> hidden;
  Probabilities probs{};
};

void check_ids(const ModelParams& params, std::span<const int> ids) {
  Require(!ids.empty(), ErrorCode::kInvalidArgument, "forward: empty token sequence");
  for (int id : ids)
    Require(id >= 0 && static_cast<std::size_t>(id) < params.dims.vocab, ErrorCode::kOutOfRange,
            "forward: token id " + std::to_string(id) + " out of range");
}

Activations run_forward(const ModelParams& p, std::span<const int> ids) {
  check_ids(p, ids);
  const std::size_t d = p.dims.embed, h = p.dims.hidden;
  Activations a;
  a.pooled.assign(d, 0.0);
  for (int id : ids) {
    auto row = p.embeddings.row(static_cast<std::size_t>(id));
    for (std::size_t i = 0; i < d; ++i) a.pooled[i] += row[i];
  }
  const double inv_n = 1.0 / static_cast<double>(ids.size());
  for (double& v : a.pooled) v *= inv_n;

  a.hidden = p.b1;
  for (std::size_t i = 0; i < d; ++i) {
    const double x = a.pooled[i];
    auto w = p.w1.row(i);
    for (std::size_t j = 0; j < h; ++j) a.hidden[j] += w[j] * x;
  }
  for (double& v : a.hidden) v = std::tanh(v);

  std::array<double, kNumClasses> logits{p.b2[0], p.b2[1]};
  for (std::size_t j = 0; j < h; ++j) {
    logits[0] += p.w2(j, 0) * a.hidden[j];
    logits[1] += p.w2(j, 1) * a.hidden[j];
  }
  // Two-class softmax in the numerically stable logistic form.
  const double diff = logits[1] - logits[0];
  if (diff >= 0) {
    const double e = std::exp(-diff);
    a.probs[1] = 1.0 / (1.0 + e);
    a.probs[0] = e / (1.0 + e);
  } else {
    const double e = std::exp(diff);
    a.probs[0] = 1.0 / (1.0 + e);
    a.probs[1] = e / (1.0 + e);
  }
  return a;
}

// Backpropagates an upstream gradient on the logits.
Gradients backprop(const ModelParams& p, std::span<const int> ids, const Activations& a,
                   const std::array<double, kNumClasses>& dlogits) {
  const std::size_t d = p.dims.embed, h = p.dims.hidden;
  Gradients g(ParamTensors::zeros(p.dims));
  g.b2[0] = dlogits[0];
  g.b2[1] = dlogits[1];
  std::vector<double> dz1(h);
  for (std::size_t j = 0; j < h; ++j) {
    g.w2(j, 0) = a.hidden[j] * dlogits[0];
    g.w2(j, 1) = a.hidden[j] * dlogits[1];
    const double dhid = p.w2(j, 0) * dlogits[0] + p.w2(j, 1) * dlogits[1];
    dz1[j] = dhid * (1.0 - a.hidden[j] * a.hidden[j]);
    g.b1[j] = dz1[j];
  }
  std::vector<double> dpooled(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    auto w = p.w1.row(i);
    auto gw = g.w1.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      gw[j] = a.pooled[i] * dz1[j];
      acc += w[j] * dz1[j];
    }
    dpooled[i] = acc / static_cast<double>(ids.size());
  }
  for (int id : ids) {
    auto row = g.embeddings.row(static_cast<std::size_t>(id));
    for (std::size_t i = 0; i < d; ++i) row[i] += dpooled[i];
  }
  return g;
}

void check_label(Label label) {
  Require(label == kNegative || label == kPositive, ErrorCode::kInvalidArgument,
          "label must be 0 or 1, got " + std::to_string(label));
}

}  // namespace

Probabilities forward(const ModelParams& params, std::span<const int> token_ids) {
  return run_forward(params, token_ids).probs;
}

double loss(const ModelParams& params, std::span<const int> token_ids, Label label) {
  check_label(label);
  return -std::log(forward(params, token_ids)[static_cast<std::size_t>(label)]);
}

Gradients backward(const ModelParams& params, std::span<const int> token_ids, Label label) {
  check_label(label);
  const Activations a = run_forward(params, token_ids);
  std::array<double, kNumClasses> dlogits = a.probs;
  dlogits[static_cast<std::size_t>(label)] -= 1.0;
  return backprop(params, token_ids, a, dlogits);
}

Gradients prob_gradient(const ModelParams& params, std::span<const int> token_ids, Label cls) {
  check_label(cls);
  const Activations a = run_forward(params, token_ids);
  // d p_c / d logit_k = p_c (1[k = c] - p_k)
  const auto c = static_cast<std::size_t>(cls);
  std::array<double, kNumClasses> dlogits{};
  for (std::size_t k = 0; k < kNumClasses; ++k)
    dlogits[k] = a.probs[c] * ((k == c ? 1.0 : 0.0) - a.probs[k]);
  return backprop(params, token_ids, a, dlogits);
}

ModelParams sgd_step(const ModelParams& params, const Gradients& grads, const ParamMask& mask,
                     double learning_rate) {
  Require(params.same_shape(grads), ErrorCode::kInvalidArgument, "sgd_step: shape mismatch");
  ModelParams out = params;
  for (int r : mask.embedding_rows) {
    Require(r >= 0 && static_cast<std::size_t>(r) < params.dims.vocab, ErrorCode::kOutOfRange,
            "sgd_step: mask row " + std::to_string(r) + " out of range");
    auto dst = out.embeddings.row(static_cast<std::size_t>(r));
    auto g = grads.embeddings.row(static_cast<std::size_t>(r));
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= learning_rate * g[i];
  }
  if (mask.head_updatable) {
    auto step = [learning_rate](std::vector<double>& y, const std::vector<double>& g) {
      for (std::size_t i = 0; i < y.size(); ++i) y[i] -= learning_rate * g[i];
    };
    step(out.w1.data(), grads.w1.data());
    step(out.b1, grads.b1);
    step(out.w2.data(), grads.w2.data());
    step(out.b2, grads.b2);
  }
  return out;
}

Label predict(const ModelParams& params, std::span<const int> token_ids) {
  const Probabilities p = forward(params, token_ids);
  return p[1] > p[0] ? kPositive : kNegative;
}

double prob_of(const ModelParams& params, std::span<const int> token_ids, Label label) {
  check_label(label);
  return forward(params, token_ids)[static_cast<std::size_t>(label)];
}

Probabilities Model::forward(const Tokens& tokens) const {
  return rapbench::forward(params, encode(tokens));
}

Label Model::predict(const Tokens& tokens) const {
  return rapbench::predict(params, encode(tokens));
}

double Model::prob_of(const Tokens& tokens, Label label) const {
  return rapbench::prob_of(params, encode(tokens), label);
}

std::set<int> Model::require_ids(const std::vector<std::string>& words, std::string_view role) const {
  std::set<int> ids;
  for (const auto& w : words) {
    auto id = vocab.find(w);
    Require(id.has_value(), ErrorCode::kFailedPrecondition,
            std::string(role) + " word '" + w + "' is not in the vocabulary");
    ids.insert(*id);
  }
  return ids;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  Require(model.vocab.size() == model.params.dims.vocab, ErrorCode::kInvalidArgument,
          "save_model: vocabulary size does not match dims");
  internal::write_json_file(internal::model_to_json(model), path);
}

Model load_model(const std::filesystem::path& path) {
  return internal::model_from_json(internal::read_json_file(path));
}

}  // namespace rapbench
