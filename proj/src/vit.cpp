#include "pdettc/nn/vit.hpp"

#include <cmath>
#include <string>

namespace pdettc::nn {

void VitConfig::validate() const {
  if (height < 1 || width < 1) throw ConfigError("image extents must be positive");
  if (patch < 1 || patch % 2 == 0) throw ConfigError("patch size must be odd");
  if (in_channels < 1 || out_channels < 1) throw ConfigError("channel counts must be positive");
  if (embed_dim < 1 || heads < 1 || embed_dim % heads != 0)
    throw ConfigError("embed_dim must be divisible by heads");
  if (depth < 0 || mlp_ratio < 1) throw ConfigError("depth >= 0 and mlp_ratio >= 1 required");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

namespace {

Matrix xavier(int rows, int cols, RngStream& rng) {
  const double sd = std::sqrt(2.0 / (rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = sd * rng.normal();
  return m;
}

Matrix gaussian(int rows, int cols, double sd, RngStream& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = sd * rng.normal();
  return m;
}

}  // namespace

VisionTransformer::VisionTransformer(const VitConfig& config, std::uint64_t init_seed)
    : config_(config) {
  config_.validate();
  layout_ = make_patch_layout(config_.height, config_.width, config_.patch, config_.in_channels);
  out_layout_ =
      make_patch_layout(config_.height, config_.width, config_.patch, config_.out_channels);
  RngStream rng(init_seed, 0x1417);
  const int d = config_.embed_dim, hidden = d * config_.mlp_ratio;

  patch_w_ = params_.add("patch.w", xavier(layout_.patch_dim(), d, rng));
  patch_b_ = params_.add("patch.b", Matrix::Zero(1, d));
  pos_ = params_.add("pos", gaussian(layout_.tokens(), d, 0.02, rng));
  for (int l = 0; l < config_.depth; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    BlockIds b;
    b.norm_g = params_.add(p + "norm.g", Matrix::Ones(1, d));
    b.norm_b = params_.add(p + "norm.b", Matrix::Zero(1, d));
    b.qkv_w = params_.add(p + "attn.qkv.w", xavier(d, 3 * d, rng));
    b.qkv_b = params_.add(p + "attn.qkv.b", Matrix::Zero(1, 3 * d));
    b.proj_w = params_.add(p + "attn.proj.w", xavier(d, d, rng));
    b.proj_b = params_.add(p + "attn.proj.b", Matrix::Zero(1, d));
    b.fc1_w = params_.add(p + "ffn.fc1.w", xavier(d, hidden, rng));
    b.fc1_b = params_.add(p + "ffn.fc1.b", Matrix::Zero(1, hidden));
    b.fc2_w = params_.add(p + "ffn.fc2.w", xavier(hidden, d, rng));
    b.fc2_b = params_.add(p + "ffn.fc2.b", Matrix::Zero(1, d));
    blocks_.push_back(b);
  }
  if (config_.head == Head::Image) {
    const int out_dim = config_.out_channels * layout_.patch_area();
    head_w_ = params_.add("head.w", xavier(d, out_dim, rng));
    head_b_ = params_.add("head.b", Matrix::Zero(1, out_dim));
  } else {
    head_w_ = params_.add("head.w", xavier(d, 1, rng));
    head_b_ = params_.add("head.b", Matrix::Zero(1, 1));
  }
}

Matrix VisionTransformer::forward(const Matrix& image, Mode mode, RngStream* rng,
                                  Tape* tape) const {
  const DropoutMode dm = dropout_mode(mode);
  const double p = config_.dropout;
  const auto& P = params_;

  Matrix patches = patchify<Scalar>(image, layout_);
  Matrix z = affine<Scalar>(patches, P.value(patch_w_), P.value(patch_b_)) + P.value(pos_);
  Matrix mask;
  z = dropout<Scalar>(z, p, dm, rng, tape ? &mask : nullptr);
  if (tape) {
    tape->patches = std::move(patches);
    tape->embed_mask = std::move(mask);
    tape->blocks.assign(blocks_.size(), {});
  }

  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const BlockIds& b = blocks_[l];
    BlockTape* bt = tape ? &tape->blocks[l] : nullptr;
    LayerNormCache<Scalar> norm_cache;
    Matrix h = layer_norm<Scalar>(z, P.value(b.norm_g), P.value(b.norm_b),
                                  bt ? &norm_cache : nullptr);

    Matrix attn_mask, hidden_mask, ffn_mask;
    Matrix attn = mhsa<Scalar>(h, P.value(b.qkv_w), P.value(b.qkv_b), P.value(b.proj_w),
                               P.value(b.proj_b), config_.heads,
                               bt ? &bt->attention : nullptr);
    attn = dropout<Scalar>(attn, p, dm, rng, bt ? &attn_mask : nullptr);

    Matrix hidden_pre = affine<Scalar>(h, P.value(b.fc1_w), P.value(b.fc1_b));
    Matrix hidden = dropout<Scalar>(gelu<Scalar>(hidden_pre), p, dm, rng,
                                    bt ? &hidden_mask : nullptr);
    Matrix ffn = affine<Scalar>(hidden, P.value(b.fc2_w), P.value(b.fc2_b));
    ffn = dropout<Scalar>(ffn, p, dm, rng, bt ? &ffn_mask : nullptr);

    if (bt) {
      bt->input = z;
      bt->norm = std::move(norm_cache);
      bt->normed = std::move(h);
      bt->attn_mask = std::move(attn_mask);
      bt->hidden_pre = std::move(hidden_pre);
      bt->hidden_mask = std::move(hidden_mask);
      bt->hidden = std::move(hidden);
      bt->ffn_mask = std::move(ffn_mask);
    }
    z += attn + ffn;
  }

  Matrix out;
  if (config_.head == Head::Image) {
    out = deconv_patch<Scalar>(z, P.value(head_w_), P.value(head_b_), out_layout_);
    if (tape) tape->final_tokens = std::move(z);
  } else {
    Matrix pooled = z.colwise().mean();
    out = affine<Scalar>(pooled, P.value(head_w_), P.value(head_b_));
    if (tape) {
      tape->final_tokens = std::move(z);
      tape->pooled = std::move(pooled);
    }
  }
  return out;
}

void VisionTransformer::backward(const Matrix& d_output, const Tape& tape,
                                 Gradients& grads) const {
  const auto& P = params_;
  Matrix dz;
  if (config_.head == Head::Image) {
    const Matrix dpatch_out = unpatchify_backward<Scalar>(d_output, out_layout_);
    dz = affine_backward<Scalar>(tape.final_tokens, P.value(head_w_), dpatch_out,
                                 grads[head_w_], grads[head_b_]);
  } else {
    const Matrix dpooled = affine_backward<Scalar>(tape.pooled, P.value(head_w_), d_output,
                                                   grads[head_w_], grads[head_b_]);
    const double n = static_cast<double>(tape.final_tokens.rows());
    dz = Matrix::Ones(tape.final_tokens.rows(), 1) * (dpooled / n);
  }

  for (std::size_t l = blocks_.size(); l-- > 0;) {
    const BlockIds& b = blocks_[l];
    const BlockTape& bt = tape.blocks[l];

    const Matrix dffn = dropout_backward<Scalar>(dz, bt.ffn_mask);
    Matrix dhidden =
        affine_backward<Scalar>(bt.hidden, P.value(b.fc2_w), dffn, grads[b.fc2_w], grads[b.fc2_b]);
    dhidden = gelu_backward<Scalar>(bt.hidden_pre, dropout_backward<Scalar>(dhidden, bt.hidden_mask));
    Matrix dh = affine_backward<Scalar>(bt.normed, P.value(b.fc1_w), dhidden, grads[b.fc1_w],
                                        grads[b.fc1_b]);

    const Matrix dattn = dropout_backward<Scalar>(dz, bt.attn_mask);
    dh += mhsa_backward<Scalar>(dattn, P.value(b.qkv_w), P.value(b.proj_w), config_.heads,
                                bt.attention, grads[b.qkv_w], grads[b.qkv_b], grads[b.proj_w],
                                grads[b.proj_b]);

    dz += layer_norm_backward<Scalar>(dh, P.value(b.norm_g), bt.norm, grads[b.norm_g],
                                      grads[b.norm_b]);
  }

  const Matrix dembed = dropout_backward<Scalar>(dz, tape.embed_mask);
  grads[pos_] += dembed;
  affine_backward<Scalar>(tape.patches, P.value(patch_w_), dembed, grads[patch_w_],
                          grads[patch_b_]);
}

}  // namespace pdettc::nn
