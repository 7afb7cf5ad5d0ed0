// Copyright 2026 The CATA Authors.
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

#include "cata/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "cata/binary_io.hpp"
#include "cata/error.hpp"

namespace cata::ae {

namespace {

Block make_block(std::size_t in, std::size_t out, std::mt19937_64& rng, const std::string& name) {
  return {nn::DenseLayer::glorot(in, out, rng, name), nn::BatchNormLayer::identity(out, name + ".bn")};
}

Matrix dense_rows(const SparseRows& data, std::span<const std::size_t> rows) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), data.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (SparseRows::InnerIterator it(data, static_cast<Eigen::Index>(rows[i])); it; ++it) {
      out(static_cast<Eigen::Index>(i), it.col()) = it.value();
    }
  }
  return out;
}

void require_width(const Matrix& rows, std::size_t width) {
  if (static_cast<std::size_t>(rows.cols()) != width) {
    throw ContractError("autoencoder input has " + std::to_string(rows.cols()) +
                        " columns, expected " + std::to_string(width));
  }
}

std::string join_widths(const std::vector<std::size_t>& widths) {
  std::string out;
  for (auto w : widths) {
    if (!out.empty()) out += ',';
    out += std::to_string(w);
  }
  return out;
}

}  // namespace

AttentiveAutoencoder AttentiveAutoencoder::build(std::size_t input_dim,
                                                 std::vector<std::size_t> hidden_widths,
                                                 std::uint64_t seed) {
  if (input_dim == 0) throw ConfigError("autoencoder input dimension must be positive");
  if (hidden_widths.empty()) throw ConfigError("autoencoder needs at least one hidden width");
  for (std::size_t i = 0; i < hidden_widths.size(); ++i) {
    if (hidden_widths[i] == 0) throw ConfigError("autoencoder widths must be positive");
    if (i > 0 && hidden_widths[i] >= hidden_widths[i - 1]) {
      throw ConfigError("autoencoder widths must be strictly decreasing, got " +
                        join_widths(hidden_widths));
    }
  }

  AttentiveAutoencoder ae;
  ae.input_dim_ = input_dim;
  ae.widths_ = std::move(hidden_widths);
  std::mt19937_64 rng(seed);
  std::size_t in = input_dim;
  for (std::size_t i = 0; i < ae.widths_.size(); ++i) {
    ae.encoder_.push_back(make_block(in, ae.widths_[i], rng, "enc" + std::to_string(i)));
    in = ae.widths_[i];
  }
  for (std::size_t i = ae.widths_.size() - 1; i-- > 0;) {
    ae.decoder_.push_back(
        make_block(in, ae.widths_[i], rng, "dec" + std::to_string(ae.decoder_.size())));
    in = ae.widths_[i];
  }
  ae.output_ = nn::DenseLayer::glorot(in, input_dim, rng, "out");
  return ae;
}

std::vector<std::size_t> AttentiveAutoencoder::layer_dims() const {
  std::vector<std::size_t> dims{input_dim_};
  for (const auto& b : encoder_) dims.push_back(b.dense.out_dim());
  for (const auto& b : decoder_) dims.push_back(b.dense.out_dim());
  dims.push_back(output_.out_dim());
  return dims;
}

nn::Tape::Var AttentiveAutoencoder::forward_encoder(nn::Tape& tape, nn::Tape::Var x, nn::Mode mode) {
  for (auto& block : encoder_) {
    x = tape.relu(tape.batchnorm(block.norm, tape.dense(block.dense, x), mode));
  }
  return x;
}

Matrix AttentiveAutoencoder::encode_pre_attention(const Matrix& rows) {
  require_width(rows, input_dim_);
  Matrix h = rows;
  for (auto& block : encoder_) {
    h = nn::relu(nn::batchnorm_forward(block.norm, nn::dense_forward(block.dense, h),
                                       nn::Mode::kEvaluation));
  }
  return h;
}

Matrix AttentiveAutoencoder::encode(const Matrix& rows) {
  return nn::attention_bottleneck(encode_pre_attention(rows));
}

Matrix AttentiveAutoencoder::encode(const SparseRows& rows) {
  Matrix out(rows.rows(), static_cast<Eigen::Index>(latent_dim()));
  constexpr std::size_t kChunk = 1024;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < static_cast<std::size_t>(rows.rows()); begin += kChunk) {
    const auto end = std::min<std::size_t>(begin + kChunk, static_cast<std::size_t>(rows.rows()));
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    out.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
        encode(dense_rows(rows, idx));
  }
  return out;
}

Matrix AttentiveAutoencoder::reconstruct(const Matrix& rows) {
  Matrix h = encode(rows);
  for (auto& block : decoder_) {
    h = nn::relu(nn::batchnorm_forward(block.norm, nn::dense_forward(block.dense, h),
                                       nn::Mode::kEvaluation));
  }
  return nn::sigmoid(nn::dense_forward(output_, h));
}

double AttentiveAutoencoder::record_loss(nn::Tape& tape, const Matrix& batch, nn::Mode mode) {
  require_width(batch, input_dim_);
  auto h = tape.attention(forward_encoder(tape, tape.constant(batch), mode));
  for (auto& block : decoder_) {
    h = tape.relu(tape.batchnorm(block.norm, tape.dense(block.dense, h), mode));
  }
  return tape.bce(tape.sigmoid(tape.dense(output_, h)), batch);
}

std::vector<nn::Parameter*> AttentiveAutoencoder::parameters() {
  std::vector<nn::Parameter*> out;
  for (auto* blocks : {&encoder_, &decoder_}) {
    for (auto& b : *blocks) {
      out.insert(out.end(), {&b.dense.weight, &b.dense.bias, &b.norm.gamma, &b.norm.beta});
    }
  }
  out.insert(out.end(), {&output_.weight, &output_.bias});
  return out;
}

void AttentiveAutoencoder::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

void AttentiveAutoencoder::save(const std::filesystem::path& path) const {
  io::TensorFile file;
  file.set_attribute("kind", "attentive_autoencoder");
  file.set_attribute("input_dim", std::to_string(input_dim_));
  file.set_attribute("widths", join_widths(widths_));
  auto add_block = [&](const Block& b) {
    file.add(b.dense.weight.name, b.dense.weight.value);
    file.add_vector(b.dense.bias.name, b.dense.bias.value.row(0).transpose());
    file.add_vector(b.norm.gamma.name, b.norm.gamma.value.row(0).transpose());
    file.add_vector(b.norm.beta.name, b.norm.beta.value.row(0).transpose());
    const auto prefix = b.norm.gamma.name.substr(0, b.norm.gamma.name.size() - 6);
    file.add_vector(prefix + ".running_mean", b.norm.running_mean.transpose());
    file.add_vector(prefix + ".running_var", b.norm.running_var.transpose());
  };
  for (const auto& b : encoder_) add_block(b);
  for (const auto& b : decoder_) add_block(b);
  file.add(output_.weight.name, output_.weight.value);
  file.add_vector(output_.bias.name, output_.bias.value.row(0).transpose());
  file.save(path);
}

AttentiveAutoencoder AttentiveAutoencoder::load(const std::filesystem::path& path) {
  const auto file = io::TensorFile::load(path);
  if (file.attribute("kind") != "attentive_autoencoder") {
    throw DataError(path.string() + " is not an autoencoder checkpoint");
  }
  std::vector<std::size_t> widths;
  std::stringstream ss(file.attribute("widths"));
  for (std::string tok; std::getline(ss, tok, ',');) widths.push_back(std::stoul(tok));
  auto ae = build(std::stoul(file.attribute("input_dim")), widths);

  auto fetch = [&](nn::Parameter& p, bool row_vector) {
    const auto& t = file.tensor(p.name);
    Matrix value = row_vector ? Matrix(t.transpose()) : t;
    if (value.rows() != p.value.rows() || value.cols() != p.value.cols()) {
      throw DataError("checkpoint tensor '" + p.name + "' has the wrong shape");
    }
    p.value = std::move(value);
  };
  auto fetch_block = [&](Block& b) {
    fetch(b.dense.weight, false);
    fetch(b.dense.bias, true);
    fetch(b.norm.gamma, true);
    fetch(b.norm.beta, true);
    const auto prefix = b.norm.gamma.name.substr(0, b.norm.gamma.name.size() - 6);
    b.norm.running_mean = file.tensor(prefix + ".running_mean").transpose();
    b.norm.running_var = file.tensor(prefix + ".running_var").transpose();
  };
  for (auto& b : ae.encoder_) fetch_block(b);
  for (auto& b : ae.decoder_) fetch_block(b);
  fetch(ae.output_.weight, false);
  fetch(ae.output_.bias, true);
  return ae;
}

PretrainResult pretrain(AttentiveAutoencoder& ae, const SparseRows& data,
                        const PretrainConfig& config) {
  if (static_cast<std::size_t>(data.cols()) != ae.input_dim()) {
    throw ContractError("pretrain: data has " + std::to_string(data.cols()) +
                        " columns but the autoencoder expects " + std::to_string(ae.input_dim()));
  }
  PretrainResult result;
  if (config.epochs == 0) return result;
  const auto n = static_cast<std::size_t>(data.rows());
  if (n < 2) throw ConfigError("pretrain: batch normalization needs at least two rows");
  if (config.batch_size < 2) throw ConfigError("pretrain: batch size must be at least 2");

  std::mt19937_64 rng(config.seed);
  nn::Adam adam(config.adam);
  auto params = ae.parameters();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  // Batch boundaries; a lone trailing row joins the previous batch.
  std::vector<std::size_t> bounds{0};
  while (bounds.back() < n) {
    auto next = std::min(n, bounds.back() + config.batch_size);
    if (n - next == 1) next = n;
    bounds.push_back(next);
  }

  nn::Tape tape;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      const std::span<const std::size_t> rows(order.data() + bounds[b], bounds[b + 1] - bounds[b]);
      tape.clear();
      ae.zero_grad();
      const double loss = ae.record_loss(tape, dense_rows(data, rows), nn::Mode::kTraining);
      if (!std::isfinite(loss)) {
        throw NumericalError("autoencoder loss is not finite at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(b));
      }
      tape.backward();
      try {
        adam.step(params);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(b) + ")");
      }
      total += loss;
    }
    result.epoch_loss.push_back(total / static_cast<double>(bounds.size() - 1));
  }
  return result;
}

}  // namespace cata::ae
