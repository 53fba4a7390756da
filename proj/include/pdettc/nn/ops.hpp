#pragma once

#include "pdettc/core/rng.hpp"
#include "pdettc/core/types.hpp"

#include <cmath>
#include <string>
#include <vector>

/// Layer kernels for the transformer. Activations are token matrices
/// (tokens x features). Every forward has a matching *_backward that
/// accumulates parameter gradients and returns the input gradient.
namespace pdettc::nn {

enum class DropoutMode { Off, On };

inline void require_shape(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("shape mismatch in ") + what);
}

// ---------------------------------------------------------------- affine

/// y = x w + 1 b, with w (in x out) and b (1 x out).
template <typename S>
MatrixT<S> affine(const MatrixT<S>& x, const MatrixT<S>& w, const MatrixT<S>& b) {
  require_shape(x.cols() == w.rows() && b.rows() == 1 && b.cols() == w.cols(), "affine");
  MatrixT<S> y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

template <typename S>
MatrixT<S> affine_backward(const MatrixT<S>& x, const MatrixT<S>& w, const MatrixT<S>& dy,
                           MatrixT<S>& dw, MatrixT<S>& db) {
  dw.noalias() += x.transpose() * dy;
  db += dy.colwise().sum();
  return dy * w.transpose();
}

// ------------------------------------------------------------ layer norm

template <typename S>
struct LayerNormCache {
  MatrixT<S> xhat;
  VectorT<S> rstd;
};

/// Row-wise normalisation to zero mean / unit variance, then g * xhat + b.
template <typename S>
MatrixT<S> layer_norm(const MatrixT<S>& x, const MatrixT<S>& g, const MatrixT<S>& b,
                      LayerNormCache<S>* cache = nullptr, S eps = S(1e-5)) {
  require_shape(g.cols() == x.cols() && b.cols() == x.cols(), "layer_norm");
  const Eigen::Index d = x.cols();
  const VectorT<S> mean = x.rowwise().mean();
  MatrixT<S> xhat = x.colwise() - mean;
  const VectorT<S> var = xhat.array().square().rowwise().sum() / S(d);
  const VectorT<S> rstd = (var.array() + eps).rsqrt();
  xhat = rstd.asDiagonal() * xhat;
  MatrixT<S> y = xhat * g.row(0).asDiagonal();
  y.rowwise() += b.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = rstd;
  }
  return y;
}

template <typename S>
MatrixT<S> layer_norm_backward(const MatrixT<S>& dy, const MatrixT<S>& g,
                               const LayerNormCache<S>& cache, MatrixT<S>& dg, MatrixT<S>& db) {
  const S d = S(dy.cols());
  dg += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  db += dy.colwise().sum();
  const MatrixT<S> dxhat = dy * g.row(0).asDiagonal();
  const VectorT<S> sum_d = dxhat.rowwise().sum();
  const VectorT<S> sum_dx = (dxhat.array() * cache.xhat.array()).rowwise().sum();
  MatrixT<S> dx = d * dxhat;
  dx.colwise() -= sum_d;
  dx -= sum_dx.asDiagonal() * cache.xhat;
  return (cache.rstd / d).asDiagonal() * dx;
}

// --------------------------------------------------------------- softmax

/// axis = 1 normalises each row, axis = 0 each column.
template <typename S>
MatrixT<S> softmax(const MatrixT<S>& x, int axis = 1) {
  if (axis == 0) return softmax<S>(x.transpose(), 1).transpose();
  const VectorT<S> mx = x.rowwise().maxCoeff();
  MatrixT<S> e = (x.colwise() - mx).array().exp().matrix();
  const VectorT<S> inv = e.rowwise().sum().cwiseInverse();
  return inv.asDiagonal() * e;
}

template <typename S>
MatrixT<S> softmax_backward(const MatrixT<S>& y, const MatrixT<S>& dy, int axis = 1) {
  if (axis == 0)
    return softmax_backward<S>(y.transpose(), dy.transpose(), 1).transpose();
  const VectorT<S> dot = (y.array() * dy.array()).rowwise().sum();
  return (y.array() * (dy.colwise() - dot).array()).matrix();
}

// ------------------------------------------------------------------ gelu

/// Exact GELU, x * Phi(x).
template <typename S>
MatrixT<S> gelu(const MatrixT<S>& x) {
  return x.unaryExpr([](S v) { return S(0.5) * v * (S(1) + std::erf(v * S(M_SQRT1_2))); });
}

template <typename S>
MatrixT<S> gelu_backward(const MatrixT<S>& x, const MatrixT<S>& dy) {
  return dy.binaryExpr(x, [](S g, S v) {
    const S cdf = S(0.5) * (S(1) + std::erf(v * S(M_SQRT1_2)));
    const S pdf = std::exp(S(-0.5) * v * v) * S(0.5 * M_2_SQRTPI * M_SQRT1_2);
    return g * (cdf + v * pdf);
  });
}

// --------------------------------------------------------------- dropout

/// Inverted dropout. With mode Off or p == 0 the input is returned
/// unchanged and `mask` is cleared; otherwise one uniform draw per entry is
/// taken from `rng` in storage order and `mask` holds 0 or 1/(1-p).
template <typename S>
MatrixT<S> dropout(const MatrixT<S>& x, double p, DropoutMode mode, RngStream* rng,
                   MatrixT<S>* mask = nullptr) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout probability must lie in [0, 1)");
  if (mode == DropoutMode::Off || p == 0.0) {
    if (mask) mask->resize(0, 0);
    return x;
  }
  if (!rng) throw ConfigError("dropout in On mode requires an RngStream");
  const S keep_scale = S(1.0 / (1.0 - p));
  MatrixT<S> m(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng->uniform() < p ? S(0) : keep_scale;
  MatrixT<S> y = x.cwiseProduct(m);
  if (mask) *mask = std::move(m);
  return y;
}

template <typename S>
MatrixT<S> dropout_backward(const MatrixT<S>& dy, const MatrixT<S>& mask) {
  if (mask.size() == 0) return dy;
  return dy.cwiseProduct(mask);
}

// ------------------------------------------------------------- attention

template <typename S>
struct AttentionCache {
  MatrixT<S> input;
  MatrixT<S> qkv;
  MatrixT<S> concat;
  std::vector<MatrixT<S>> weights;  // one row-stochastic (N x N) matrix per head
};

/// Multi-head self-attention: qkv = x w_qkv + b_qkv split into heads,
/// softmax(q k^T / sqrt(d_head)) v per head, concatenated and projected.
template <typename S>
MatrixT<S> mhsa(const MatrixT<S>& x, const MatrixT<S>& w_qkv, const MatrixT<S>& b_qkv,
                const MatrixT<S>& w_out, const MatrixT<S>& b_out, int heads,
                AttentionCache<S>* cache = nullptr) {
  const Eigen::Index n = x.rows(), d = x.cols();
  require_shape(heads > 0 && d % heads == 0, "mhsa (embed dim not divisible by heads)");
  require_shape(w_qkv.rows() == d && w_qkv.cols() == 3 * d && w_out.rows() == d &&
                    w_out.cols() == d,
                "mhsa");
  const Eigen::Index dh = d / heads;
  const S scale = S(1) / std::sqrt(S(dh));
  MatrixT<S> qkv = affine<S>(x, w_qkv, b_qkv);
  MatrixT<S> concat(n, d);
  std::vector<MatrixT<S>> weights;
  if (cache) weights.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    const auto q = qkv.middleCols(h * dh, dh);
    const auto k = qkv.middleCols(d + h * dh, dh);
    const auto v = qkv.middleCols(2 * d + h * dh, dh);
    MatrixT<S> scores = scale * (q * k.transpose());
    MatrixT<S> a = softmax<S>(scores, 1);
    concat.middleCols(h * dh, dh).noalias() = a * v;
    if (cache) weights.push_back(std::move(a));
  }
  MatrixT<S> out = affine<S>(concat, w_out, b_out);
  if (cache) {
    cache->input = x;
    cache->qkv = std::move(qkv);
    cache->concat = std::move(concat);
    cache->weights = std::move(weights);
  }
  return out;
}

template <typename S>
MatrixT<S> mhsa_backward(const MatrixT<S>& dout, const MatrixT<S>& w_qkv, const MatrixT<S>& w_out,
                         int heads, const AttentionCache<S>& cache, MatrixT<S>& dw_qkv,
                         MatrixT<S>& db_qkv, MatrixT<S>& dw_out, MatrixT<S>& db_out) {
  const Eigen::Index n = cache.input.rows(), d = cache.input.cols();
  const Eigen::Index dh = d / heads;
  const S scale = S(1) / std::sqrt(S(dh));
  const MatrixT<S> dconcat = affine_backward<S>(cache.concat, w_out, dout, dw_out, db_out);
  MatrixT<S> dqkv(n, 3 * d);
  for (int h = 0; h < heads; ++h) {
    const auto q = cache.qkv.middleCols(h * dh, dh);
    const auto k = cache.qkv.middleCols(d + h * dh, dh);
    const auto v = cache.qkv.middleCols(2 * d + h * dh, dh);
    const MatrixT<S>& a = cache.weights[h];
    const auto dhead = dconcat.middleCols(h * dh, dh);
    dqkv.middleCols(2 * d + h * dh, dh).noalias() = a.transpose() * dhead;
    const MatrixT<S> da = dhead * v.transpose();
    const MatrixT<S> dscores = scale * softmax_backward<S>(a, da, 1);
    dqkv.middleCols(h * dh, dh).noalias() = dscores * k;
    dqkv.middleCols(d + h * dh, dh).noalias() = dscores.transpose() * q;
  }
  return affine_backward<S>(cache.input, w_qkv, dqkv, dw_qkv, db_qkv);
}

// ----------------------------------------------------------- patchifying

/// Geometry of the circular pad / non-overlapping patch split. Images are
/// (channels x H*W) matrices with pixel index row * W + col.
struct PatchLayout {
  int height = 0, width = 0, patch = 1, channels = 1;
  int padded_height = 0, padded_width = 0;
  int pad_top = 0, pad_left = 0;
  int grid_height = 0, grid_width = 0;
  /// Source pixel (wrapped) for every (token, in-patch offset).
  std::vector<int> gather;
  /// Destination pixel for every (token, in-patch offset), -1 when cropped.
  std::vector<int> scatter;

  int tokens() const { return grid_height * grid_width; }
  int patch_area() const { return patch * patch; }
  int patch_dim() const { return channels * patch * patch; }
};

/// Pads H and W up to the next multiples of `patch`, splitting the excess
/// as evenly as possible between both sides.
PatchLayout make_patch_layout(int height, int width, int patch, int channels);

/// (channels x H*W) -> (tokens x channels*P*P), feature index c*P*P + a*P + b.
template <typename S>
MatrixT<S> patchify(const MatrixT<S>& image, const PatchLayout& layout) {
  require_shape(image.rows() == layout.channels &&
                    image.cols() == static_cast<Eigen::Index>(layout.height) * layout.width,
                "patchify");
  const int n = layout.tokens(), area = layout.patch_area();
  MatrixT<S> out(n, layout.patch_dim());
  for (int c = 0; c < layout.channels; ++c)
    for (int t = 0; t < n; ++t)
      for (int k = 0; k < area; ++k) out(t, c * area + k) = image(c, layout.gather[t * area + k]);
  return out;
}

/// Adjoint of patchify: wrapped pixels receive the sum of their copies.
template <typename S>
MatrixT<S> patchify_backward(const MatrixT<S>& dpatches, const PatchLayout& layout) {
  const int n = layout.tokens(), area = layout.patch_area();
  MatrixT<S> dimage = MatrixT<S>::Zero(layout.channels,
                                       static_cast<Eigen::Index>(layout.height) * layout.width);
  for (int c = 0; c < layout.channels; ++c)
    for (int t = 0; t < n; ++t)
      for (int k = 0; k < area; ++k) dimage(c, layout.gather[t * area + k]) += dpatches(t, c * area + k);
  return dimage;
}

/// (tokens x channels*P*P) -> (channels x H*W), dropping the padded border.
template <typename S>
MatrixT<S> unpatchify(const MatrixT<S>& patches, const PatchLayout& layout) {
  require_shape(patches.rows() == layout.tokens() && patches.cols() == layout.patch_dim(),
                "unpatchify");
  const int n = layout.tokens(), area = layout.patch_area();
  MatrixT<S> image(layout.channels, static_cast<Eigen::Index>(layout.height) * layout.width);
  for (int c = 0; c < layout.channels; ++c)
    for (int t = 0; t < n; ++t)
      for (int k = 0; k < area; ++k) {
        const int dst = layout.scatter[t * area + k];
        if (dst >= 0) image(c, dst) = patches(t, c * area + k);
      }
  return image;
}

template <typename S>
MatrixT<S> unpatchify_backward(const MatrixT<S>& dimage, const PatchLayout& layout) {
  const int n = layout.tokens(), area = layout.patch_area();
  MatrixT<S> dpatches = MatrixT<S>::Zero(n, layout.patch_dim());
  for (int c = 0; c < layout.channels; ++c)
    for (int t = 0; t < n; ++t)
      for (int k = 0; k < area; ++k) {
        const int dst = layout.scatter[t * area + k];
        if (dst >= 0) dpatches(t, c * area + k) = dimage(c, dst);
      }
  return dpatches;
}

/// Patch-embedding convolution (kernel = stride = P) as patchify + affine.
template <typename S>
MatrixT<S> conv_patch(const MatrixT<S>& image, const MatrixT<S>& kernel, const MatrixT<S>& bias,
                      const PatchLayout& layout) {
  return affine<S>(patchify<S>(image, layout), kernel, bias);
}

/// Transposed patch convolution: tokens -> pixels, reassembled and cropped.
template <typename S>
MatrixT<S> deconv_patch(const MatrixT<S>& tokens, const MatrixT<S>& kernel,
                        const MatrixT<S>& bias, const PatchLayout& layout) {
  return unpatchify<S>(affine<S>(tokens, kernel, bias), layout);
}

}  // namespace pdettc::nn
