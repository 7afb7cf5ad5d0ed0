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

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "cata/nn.hpp"

namespace cata::ae {

using nn::Matrix;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Block {
  nn::DenseLayer dense;
  nn::BatchNormLayer norm;
};

struct PretrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  nn::AdamConfig adam{};
  std::uint64_t seed = 0;
};

struct PretrainResult {
  std::vector<double> epoch_loss;  // mean batch BCE per epoch
};

/// Symmetric encoder/decoder with a softmax attention bottleneck.
///
/// Encoder blocks are dense -> batch norm -> ReLU, with widths
/// input_dim -> w[0] -> ... -> w[k-1]. The latent code is the attention
/// product softmax(e) * e of the last block's output e. The decoder mirrors
/// the hidden widths back up (same block type) and ends in a dense layer to
/// input_dim with a sigmoid, so reconstructions lie in (0, 1).
class AttentiveAutoencoder {
 public:
  // Widths must be non-empty and strictly decreasing; throws ConfigError.
  static AttentiveAutoencoder build(std::size_t input_dim, std::vector<std::size_t> hidden_widths,
                                    std::uint64_t seed = 0);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t latent_dim() const { return widths_.back(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  // Layer widths from input to reconstruction, e.g. 8000-400-...-400-8000.
  std::vector<std::size_t> layer_dims() const;

  // Evaluation-mode passes (running batch-norm statistics).
  Matrix encode_pre_attention(const Matrix& rows);
  Matrix encode(const Matrix& rows);
  Matrix reconstruct(const Matrix& rows);
  Matrix encode(const SparseRows& rows);

  // One recorded training-mode pass over a batch; returns the BCE loss.
  double record_loss(nn::Tape& tape, const Matrix& batch, nn::Mode mode);

  std::vector<nn::Parameter*> parameters();
  void zero_grad();

  const std::vector<Block>& encoder() const { return encoder_; }
  const std::vector<Block>& decoder() const { return decoder_; }
  const nn::DenseLayer& output() const { return output_; }

  // Stored via the tensor container; widths go in the attributes.
  void save(const std::filesystem::path& path) const;
  static AttentiveAutoencoder load(const std::filesystem::path& path);

 private:
  nn::Tape::Var forward_encoder(nn::Tape& tape, nn::Tape::Var x, nn::Mode mode);

  std::size_t input_dim_ = 0;
  std::vector<std::size_t> widths_;
  std::vector<Block> encoder_;
  std::vector<Block> decoder_;
  nn::DenseLayer output_;
};

/// Minibatch reconstruction training with Adam. Rows are reshuffled every
/// epoch from `config.seed`; a trailing batch of one row is merged into its
/// predecessor because batch norm needs two rows. Throws NumericalError
/// naming the epoch and batch on a non-finite loss.
PretrainResult pretrain(AttentiveAutoencoder& ae, const SparseRows& data,
                        const PretrainConfig& config);

}  // namespace cata::ae
