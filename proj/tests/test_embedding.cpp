#include <doctest.h>

#include <cmath>

#include "bayesic/embedding.hpp"
#include "bayesic/errors.hpp"
#include "bayesic/rng.hpp"
#include "bayesic/synthgen.hpp"
#include "bayesic/training.hpp"
#include "test_support.hpp"

using namespace bayesic;
using bayesic::nn::Graph;
using bayesic::nn::Matrix;
using bayesic::nn::Value;

namespace {

EmbeddingConfig tiny_config() {
  EmbeddingConfig c;
  c.input_width = 5;  // K = 3
  c.model_width = 8;
  c.latent_width = 4;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.heads = 2;
  c.ffn_width = 8;
  c.window = 8;
  return c;
}

Matrix random_body(int n, int width, Rng& rng) {
  Matrix m(n, width);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < width; ++j) m(i, j) = rng.uniform();
  }
  return m;
}

}  // namespace

TEST_CASE("embed is deterministic and shape-correct") {
  Rng rng(1);
  EmbeddingModel model(tiny_config(), rng);
  Rng data_rng(2);
  const Matrix body = random_body(5, 5, data_rng);

  const Eigen::VectorXd h1 = model.embed(body);
  const Eigen::VectorXd h2 = model.embed(body);
  CHECK(h1.size() == 4);
  CHECK(h1 == h2);  // bit-identical

  // No equality contract across different inputs; just a smoke check that
  // the model is sensitive to them.
  Matrix other = body;
  other(2, 1) += 0.5;
  const Eigen::VectorXd h3 = model.embed(other);
  CHECK(h1.size() == h3.size());
}

TEST_CASE("zero weights and zero prefix give the zero embedding") {
  Rng rng(1);
  EmbeddingModel model(tiny_config(), rng);
  for (auto* p : model.parameters()) p->value.setZero();
  Rng data_rng(2);
  const Eigen::VectorXd h = model.embed(random_body(4, 5, data_rng));
  CHECK(h.norm() == 0.0);
}

TEST_CASE("embed validates widths and window bounds") {
  Rng rng(1);
  EmbeddingModel model(tiny_config(), rng);
  Rng data_rng(2);
  Graph g;
  CHECK_THROWS_AS(model.embed_on(g, g.input(random_body(3, 4, data_rng))),
                  ShapeError);
  CHECK_THROWS_AS(model.embed_on(g, g.input(random_body(9, 5, data_rng))),
                  ShapeError);
}

TEST_CASE("reconstruct shape, determinism, boundaries") {
  Rng rng(3);
  EmbeddingModel model(tiny_config(), rng);
  Eigen::VectorXd h(4);
  h << 0.1, -0.2, 0.3, 0.05;

  const Matrix r3 = model.reconstruct(h, 3);
  CHECK(r3.rows() == 3);
  CHECK(r3.cols() == 5);
  CHECK(model.reconstruct(h, 3) == r3);

  const Matrix r_full = model.reconstruct(h, 8);  // n = window
  CHECK(r_full.rows() == 8);

  CHECK_THROWS_AS(model.reconstruct(h, 0), ShapeError);
  CHECK_THROWS_AS(model.reconstruct(h, 9), ShapeError);
}

TEST_CASE("reconstruction_loss") {
  Matrix e(1, 4);
  e << 1, 0, 0, 0;
  CHECK(reconstruction_loss(e, e) == 0.0);

  // Hand oracle: sum of squared residuals / (n * width) = 1 / 4.
  Matrix zero = Matrix::Zero(1, 4);
  double oracle = 0.0;
  for (int j = 0; j < 4; ++j) oracle += (e(0, j) - zero(0, j)) * (e(0, j) - zero(0, j));
  oracle /= 4.0;
  CHECK(oracle == 0.25);
  CHECK(reconstruction_loss(e, zero) == doctest::Approx(0.25));

  // Doubling every residual quadruples the loss.
  Matrix e2 = 2.0 * e;
  CHECK(reconstruction_loss(e2, Matrix::Zero(1, 4)) ==
        doctest::Approx(4.0 * reconstruction_loss(e, zero)));

  CHECK_THROWS_AS(reconstruction_loss(e, Matrix::Zero(2, 4)), ShapeError);
}

TEST_CASE("autoencoder gradient matches finite differences (tiny model)") {
  EmbeddingConfig config = tiny_config();
  config.model_width = 8;
  config.encoder_layers = 1;
  config.decoder_layers = 1;
  Rng rng(11);
  EmbeddingModel model(config, rng);
  auto params = model.parameters();

  Rng data_rng(12);
  const Matrix body = random_body(4, 5, data_rng);

  const auto forward = [&]() -> double {
    Graph g;
    Value b = g.input(body);
    Value h = model.embed_on(g, b);
    Value recon = model.reconstruct_on(g, h, 4);
    return g.mean_all(g.square(g.sub(recon, b))).scalar();
  };

  for (int point = 0; point < 2; ++point) {
    for (auto* p : params) {
      for (Eigen::Index i = 0; i < p->value.size(); ++i) {
        p->value.data()[i] = 0.3 * rng.normal();
      }
      if (p->name.find(".gain") != std::string::npos) {
        p->value.setConstant(1.0);
      }
      p->zero_grad();
    }
    {
      Graph g;
      Value b = g.input(body);
      Value h = model.embed_on(g, b);
      Value recon = model.reconstruct_on(g, h, 4);
      g.backward(g.mean_all(g.square(g.sub(recon, b))));
    }
    CHECK(test_support::max_grad_relative_error(params, forward) < 1e-4);
  }
}

TEST_CASE("autoencoder loss drops after 200 optimization steps") {
  EmbeddingConfig config = tiny_config();
  Rng rng(21);
  EmbeddingModel model(config, rng);
  auto params = model.parameters();
  nn::Adam opt(params, 1e-3);

  Rng data_rng(22);
  std::vector<Matrix> bodies;
  for (int i = 0; i < 4; ++i) bodies.push_back(random_body(6, 5, data_rng));

  const auto total_loss = [&]() {
    double total = 0.0;
    for (const auto& body : bodies) {
      Graph g;
      Value b = g.input(body);
      Value recon = model.reconstruct_on(g, model.embed_on(g, b),
                                         static_cast<int>(body.rows()));
      total += g.mean_all(g.square(g.sub(recon, b))).scalar();
    }
    return total;
  };

  const double before = total_loss();
  for (int step = 0; step < 200; ++step) {
    opt.zero_grad();
    for (const auto& body : bodies) {
      Graph g;
      Value b = g.input(body);
      Value recon = model.reconstruct_on(g, model.embed_on(g, b),
                                         static_cast<int>(body.rows()));
      g.backward(g.mean_all(g.square(g.sub(recon, b))));
    }
    opt.step(1.0 / bodies.size());
  }
  const double after = total_loss();
  CHECK(after < before);
}

TEST_CASE("make_windows splits bodies without overlap") {
  Rng rng(5);
  const Matrix body = random_body(10, 5, rng);
  const auto windows = make_windows(body, 4);
  REQUIRE(windows.size() == 3);
  CHECK(windows[0].rows() == 4);
  CHECK(windows[1].rows() == 4);
  CHECK(windows[2].rows() == 2);
  CHECK(windows[0] == body.topRows(4));
  CHECK(windows[2] == body.bottomRows(2));
}

TEST_CASE("compute_agent_embeddings averages window embeddings") {
  const auto data = generate(default_personas(), 3, 2, 1, kDefaultWeekAnchor, 9);
  const auto stats = fit_normalization(data.train, kDefaultWeekAnchor);

  EmbeddingConfig config = tiny_config();
  config.input_width = stats.encoded_width();
  config.window = 16;
  Rng rng(31);
  EmbeddingModel model(config, rng);

  const auto embeddings = compute_agent_embeddings(model, data.train, stats);
  CHECK(embeddings.size() == data.train.agents.size());

  for (const auto& [id, seq] : data.train.agents) {
    const auto enc = encode_sequence(seq, stats, model.prefix_token());
    const Matrix body = enc.tokens.bottomRows(enc.tokens.rows() - 1);
    const auto windows = make_windows(body, config.window);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(config.latent_width);
    for (const auto& w : windows) mean += model.embed(w);
    mean /= static_cast<double>(windows.size());
    CHECK((embeddings.at(id) - mean).norm() == 0.0);
    if (windows.size() == 1) {
      CHECK(embeddings.at(id) == model.embed(windows[0]));
    }
  }
}
