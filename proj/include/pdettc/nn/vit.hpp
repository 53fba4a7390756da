#pragma once

#include "pdettc/nn/ops.hpp"
#include "pdettc/nn/params.hpp"

#include <cstdint>
#include <vector>

namespace pdettc::nn {

/// Which passes sample dropout masks.
enum class Mode { Train, StochasticInfer, DeterministicInfer };

inline DropoutMode dropout_mode(Mode m) {
  return m == Mode::DeterministicInfer ? DropoutMode::Off : DropoutMode::On;
}

enum class Head {
  Image,   // tokens -> pixels through a transposed patch projection
  Scalar,  // mean-pooled tokens -> one affine output
};

struct VitConfig {
  int height = 64;
  int width = 64;
  int patch = 7;
  int in_channels = 5;
  int out_channels = 4;
  int embed_dim = 64;
  int depth = 4;
  int heads = 4;
  int mlp_ratio = 4;
  double dropout = 0.1;
  Head head = Head::Image;

  /// Throws ConfigError unless embed_dim % heads == 0 and patch is odd.
  void validate() const;
  bool operator==(const VitConfig&) const = default;
};

/// Patch encoder, parallel pre-norm transformer blocks
///   z <- z + MHSA(LN(z)) + FFN(LN(z))
/// and either an image or a scalar head. Gradients come from a hand-written
/// reverse pass over this fixed graph.
class VisionTransformer {
 public:
  struct BlockTape {
    Matrix input;
    LayerNormCache<Scalar> norm;
    Matrix normed;
    AttentionCache<Scalar> attention;
    Matrix attn_mask;
    Matrix hidden_pre;  // fc1 output before GELU
    Matrix hidden_mask;
    Matrix hidden;      // after GELU and dropout
    Matrix ffn_mask;
  };

  struct Tape {
    Matrix patches;
    Matrix embed_mask;
    std::vector<BlockTape> blocks;
    Matrix final_tokens;
    Matrix pooled;
  };

  VisionTransformer() = default;
  VisionTransformer(const VitConfig& config, std::uint64_t init_seed);

  /// image: (in_channels x H*W). Returns (out_channels x H*W) for the image
  /// head or 1x1 for the scalar head. `rng` is required when dropout is
  /// active for `mode`; the tape is filled when non-null.
  Matrix forward(const Matrix& image, Mode mode, RngStream* rng, Tape* tape = nullptr) const;

  /// Accumulates dLoss/dparams into `grads` given dLoss/doutput.
  void backward(const Matrix& d_output, const Tape& tape, Gradients& grads) const;

  const VitConfig& config() const { return config_; }
  const PatchLayout& layout() const { return layout_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  struct BlockIds {
    int norm_g, norm_b, qkv_w, qkv_b, proj_w, proj_b, fc1_w, fc1_b, fc2_w, fc2_b;
  };

  VitConfig config_;
  PatchLayout layout_;      // input channels
  PatchLayout out_layout_;  // output channels of the image head
  ParamStore params_;
  int patch_w_ = -1, patch_b_ = -1, pos_ = -1, head_w_ = -1, head_b_ = -1;
  std::vector<BlockIds> blocks_;
};

}  // namespace pdettc::nn
