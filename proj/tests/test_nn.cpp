#include "gradcheck.hpp"

#include "pdettc/nn/ops.hpp"
#include "pdettc/nn/params.hpp"
#include "pdettc/nn/vit.hpp"

#include <doctest.h>

using namespace pdettc;
using namespace pdettc::nn;
using testing::numeric_gradient;
using testing::relative_error;

namespace {

Matrix random_matrix(int r, int c, std::uint64_t seed, double scale = 1.0) {
  RngStream rng(seed, 5);
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = scale * rng.normal();
  return m;
}

VitConfig tiny_config(Head head = Head::Image) {
  VitConfig c;
  c.height = c.width = 8;
  c.patch = 3;
  c.in_channels = 5;
  c.out_channels = head == Head::Image ? 4 : 1;
  c.embed_dim = 8;
  c.depth = 1;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.dropout = 0.1;
  c.head = head;
  return c;
}

}  // namespace

TEST_CASE("affine gradient") {
  const Matrix x = random_matrix(4, 3, 1), w = random_matrix(3, 5, 2), b = random_matrix(1, 5, 3);
  const Matrix r = random_matrix(4, 5, 4);
  Matrix dw = Matrix::Zero(3, 5), db = Matrix::Zero(1, 5);
  const Matrix dx = affine_backward<Scalar>(x, w, r, dw, db);
  CHECK(relative_error(dx, numeric_gradient([&](const Matrix& v) { return affine<Scalar>(v, w, b).cwiseProduct(r).sum(); }, x)) < 1e-8);
  CHECK(relative_error(dw, numeric_gradient([&](const Matrix& v) { return affine<Scalar>(x, v, b).cwiseProduct(r).sum(); }, w)) < 1e-8);
  CHECK(relative_error(db, numeric_gradient([&](const Matrix& v) { return affine<Scalar>(x, w, v).cwiseProduct(r).sum(); }, b)) < 1e-8);
}

TEST_CASE("layer norm output statistics and gradient") {
  const Matrix x = random_matrix(5, 6, 7, 3.0), g = random_matrix(1, 6, 8), b = random_matrix(1, 6, 9);
  LayerNormCache<Scalar> cache;
  const Matrix y = layer_norm<Scalar>(x, Matrix::Ones(1, 6), Matrix::Zero(1, 6), &cache);
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(y.row(i).mean()) < 1e-12);
    CHECK(y.row(i).squaredNorm() / 6.0 == doctest::Approx(1.0).epsilon(1e-4));
  }
  const Matrix r = random_matrix(5, 6, 10);
  layer_norm<Scalar>(x, g, b, &cache);
  Matrix dg = Matrix::Zero(1, 6), db = Matrix::Zero(1, 6);
  const Matrix dx = layer_norm_backward<Scalar>(r, g, cache, dg, db);
  auto f = [&](const Matrix& v) { return layer_norm<Scalar>(v, g, b).cwiseProduct(r).sum(); };
  CHECK(relative_error(dx, numeric_gradient(f, x)) < 1e-7);
  CHECK(relative_error(dg, numeric_gradient([&](const Matrix& v) { return layer_norm<Scalar>(x, v, b).cwiseProduct(r).sum(); }, g)) < 1e-8);
}

TEST_CASE("softmax rows are distributions and the gradient matches") {
  const Matrix x = random_matrix(4, 7, 11, 2.0);
  for (int axis : {0, 1}) {
    const Matrix y = softmax<Scalar>(x, axis);
    const Matrix sums = axis == 1 ? Matrix(y.rowwise().sum()) : Matrix(y.colwise().sum().transpose());
    CHECK((sums.array() - 1.0).abs().maxCoeff() < 1e-14);
    const Matrix r = random_matrix(4, 7, 12);
    const Matrix dx = softmax_backward<Scalar>(y, r, axis);
    CHECK(relative_error(dx, numeric_gradient([&](const Matrix& v) { return softmax<Scalar>(v, axis).cwiseProduct(r).sum(); }, x)) < 1e-8);
  }
  Matrix big(1, 2);
  big << 1000.0, 0.0;
  CHECK(softmax<Scalar>(big).allFinite());
}

TEST_CASE("gelu values and gradient") {
  Matrix x(1, 3);
  x << 0.0, 1.0, -1.0;
  const Matrix y = gelu<Scalar>(x);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
  CHECK(y(0, 2) == doctest::Approx(-0.15865525393145707).epsilon(1e-14));
  const Matrix z = random_matrix(3, 4, 13, 2.0), r = random_matrix(3, 4, 14);
  CHECK(relative_error(gelu_backward<Scalar>(z, r), numeric_gradient([&](const Matrix& v) { return gelu<Scalar>(v).cwiseProduct(r).sum(); }, z)) < 1e-8);
}

TEST_CASE("dropout contract") {
  const Matrix x = random_matrix(20, 30, 15);
  RngStream a(1, 2), b(1, 2), c(1, 3);
  Matrix mask;
  const Matrix ya = dropout<Scalar>(x, 0.25, DropoutMode::On, &a, &mask);
  CHECK((ya.array() == dropout<Scalar>(x, 0.25, DropoutMode::On, &b).array()).all());
  CHECK(!(ya.array() == dropout<Scalar>(x, 0.25, DropoutMode::On, &c).array()).all());
  const double kept = (mask.array() > 0).cast<double>().mean();
  CHECK(kept == doctest::Approx(0.75).epsilon(0.1));
  CHECK(((mask.array() == 0.0) || (mask.array() == 1.0 / 0.75)).all());
  CHECK((dropout<Scalar>(x, 0.25, DropoutMode::Off, nullptr).array() == x.array()).all());
  CHECK((dropout<Scalar>(x, 0.0, DropoutMode::On, &a).array() == x.array()).all());
  CHECK_THROWS_AS(dropout<Scalar>(x, 1.0, DropoutMode::On, &a), ConfigError);
  CHECK_THROWS_AS(dropout<Scalar>(x, 0.5, DropoutMode::On, nullptr), ConfigError);
}

TEST_CASE("attention gradient") {
  const int n = 5, d = 6, heads = 3;
  const Matrix x = random_matrix(n, d, 16), wq = random_matrix(d, 3 * d, 17, 0.5),
               bq = random_matrix(1, 3 * d, 18, 0.1), wo = random_matrix(d, d, 19, 0.5),
               bo = random_matrix(1, d, 20, 0.1), r = random_matrix(n, d, 21);
  AttentionCache<Scalar> cache;
  mhsa<Scalar>(x, wq, bq, wo, bo, heads, &cache);
  for (const auto& a : cache.weights) CHECK((a.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
  Matrix dwq = Matrix::Zero(d, 3 * d), dbq = Matrix::Zero(1, 3 * d), dwo = Matrix::Zero(d, d),
         dbo = Matrix::Zero(1, d);
  const Matrix dx = mhsa_backward<Scalar>(r, wq, wo, heads, cache, dwq, dbq, dwo, dbo);
  auto loss = [&](const Matrix& xx, const Matrix& wqq, const Matrix& woo) {
    return mhsa<Scalar>(xx, wqq, bq, woo, bo, heads).cwiseProduct(r).sum();
  };
  CHECK(relative_error(dx, numeric_gradient([&](const Matrix& v) { return loss(v, wq, wo); }, x)) < 1e-7);
  CHECK(relative_error(dwq, numeric_gradient([&](const Matrix& v) { return loss(x, v, wo); }, wq)) < 1e-7);
  CHECK(relative_error(dwo, numeric_gradient([&](const Matrix& v) { return loss(x, wq, v); }, wo)) < 1e-7);
}

TEST_CASE("patch layout pads circularly and the transforms are adjoint") {
  for (int patch : {3, 5, 7}) {
    const auto layout = make_patch_layout(8, 10, patch, 2);
    CHECK(layout.padded_height % patch == 0);
    CHECK(layout.padded_width % patch == 0);
    CHECK(layout.padded_height - 8 < patch);
    const Matrix img = random_matrix(2, 80, 22 + patch);
    const Matrix pat = random_matrix(layout.tokens(), layout.patch_dim(), 30 + patch);
    const double lhs = patchify<Scalar>(img, layout).cwiseProduct(pat).sum();
    const double rhs = img.cwiseProduct(patchify_backward<Scalar>(pat, layout)).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    const double lhs2 = unpatchify<Scalar>(pat, layout).cwiseProduct(img).sum();
    const double rhs2 = pat.cwiseProduct(unpatchify_backward<Scalar>(img, layout)).sum();
    CHECK(lhs2 == doctest::Approx(rhs2).epsilon(1e-12));
    // Every pixel appears in the gather set, and unpatchify(patchify(x)) = x.
    CHECK((unpatchify<Scalar>(patchify<Scalar>(img, layout), layout) - img).norm() == 0.0);
  }
}

TEST_CASE("vit configuration validation") {
  auto c = tiny_config();
  c.patch = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("end-to-end model gradient matches central differences") {
  for (Head head : {Head::Image, Head::Scalar}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      CAPTURE(seed);
      VisionTransformer net(tiny_config(head), 100 + seed);
      const Matrix image = random_matrix(5, 64, 200 + seed);
      const Matrix r = random_matrix(head == Head::Image ? 4 : 1, head == Head::Image ? 64 : 1, 300 + seed);
      // Same stream for every evaluation fixes the dropout masks.
      auto loss = [&](const VisionTransformer& m) {
        RngStream rng(seed, 9);
        return m.forward(image, Mode::Train, &rng).cwiseProduct(r).sum();
      };
      VisionTransformer::Tape tape;
      RngStream rng(seed, 9);
      net.forward(image, Mode::Train, &rng, &tape);
      Gradients grads = net.params().zero_gradients();
      net.backward(r, tape, grads);

      Matrix analytic(1, 0), numeric(1, 0);
      std::vector<double> a_all, n_all;
      for (int id = 0; id < net.params().size(); ++id) {
        VisionTransformer probe = net;
        const Matrix fd = numeric_gradient(
            [&](const Matrix& v) {
              probe.params()[id].value = v;
              return loss(probe);
            },
            net.params().value(id));
        a_all.insert(a_all.end(), grads[id].data(), grads[id].data() + grads[id].size());
        n_all.insert(n_all.end(), fd.data(), fd.data() + fd.size());
      }
      const Matrix a = Eigen::Map<Matrix>(a_all.data(), 1, static_cast<Eigen::Index>(a_all.size()));
      const Matrix n = Eigen::Map<Matrix>(n_all.data(), 1, static_cast<Eigen::Index>(n_all.size()));
      CHECK(relative_error(a, n) < 1e-4);
    }
  }
}

TEST_CASE("deterministic inference is bit-reproducible and ignores the stream") {
  VisionTransformer net(tiny_config(), 1);
  const Matrix image = random_matrix(5, 64, 2);
  RngStream rng(3, 4);
  const Matrix a = net.forward(image, Mode::DeterministicInfer, nullptr);
  const Matrix b = net.forward(image, Mode::DeterministicInfer, &rng);
  CHECK((a.array() == b.array()).all());
  CHECK(rng.counter() == 0);
}

TEST_CASE("zero dropout makes stochastic inference deterministic") {
  auto cfg = tiny_config();
  cfg.dropout = 0.0;
  VisionTransformer net(cfg, 1);
  const Matrix image = random_matrix(5, 64, 2);
  RngStream rng(3, 4);
  CHECK((net.forward(image, Mode::StochasticInfer, &rng).array() ==
         net.forward(image, Mode::DeterministicInfer, nullptr).array())
            .all());
}

TEST_CASE("initialisation is seeded") {
  VisionTransformer a(tiny_config(), 5), b(tiny_config(), 5), c(tiny_config(), 6);
  CHECK((a.params().value(0).array() == b.params().value(0).array()).all());
  CHECK(!(a.params().value(0).array() == c.params().value(0).array()).all());
}

TEST_CASE("adamw first step matches the closed form") {
  ParamStore store;
  Matrix init(1, 2);
  init << 1.0, -2.0;
  store.add("w", init);
  store[0].grad = Matrix(1, 2);
  store[0].grad << 0.5, -0.25;
  AdamWConfig cfg{0.1, 0.01, 0.9, 0.999, 1e-8};
  adamw_step(store, cfg);
  // Bias-corrected first step moves each weight by lr * sign(g).
  CHECK(store.value(0)(0, 0) == doctest::Approx(1.0 * (1 - 0.001) - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(store.value(0)(0, 1) == doctest::Approx(-2.0 * (1 - 0.001) + 0.1 * 0.25 / (0.25 + 1e-8)).epsilon(1e-12));
  CHECK(store.step == 1);
}

TEST_CASE("adamw refuses non-finite gradients without touching parameters") {
  ParamStore store;
  store.add("good", Matrix::Ones(1, 1));
  store.add("bad", Matrix::Ones(1, 1));
  store[0].grad = Matrix::Ones(1, 1);
  store[1].grad = Matrix::Constant(1, 1, std::nan(""));
  try {
    adamw_step(store, {});
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("bad") != std::string::npos);
  }
  CHECK(store.value(0)(0, 0) == 1.0);
  CHECK(store.step == 0);
}
