#include <doctest.h>

#include <cmath>
#include <fstream>

#include "smarte/gradcheck.hpp"
#include "smarte/ops.hpp"
#include "smarte/slot_attention.hpp"
#include "test_util.hpp"

using namespace smarte;
using smarte::testing::probe_weights;
using smarte::testing::random_matrix;

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

// Softmax-variant slot attention written directly in Eigen.
Eigen::MatrixXd reference_softmax_slots(const Eigen::MatrixXd& h, SlotAttentionParams& p, int iterations) {
  const double d = static_cast<double>(h.cols());
  const Eigen::MatrixXd K = h * Eigen::MatrixXd(p.w_k.value), V = h * Eigen::MatrixXd(p.w_v.value);
  Eigen::MatrixXd z = p.slot_init.value;
  auto w = [](const Parameter& q) { return Eigen::MatrixXd(q.value); };
  auto b = [](const Parameter& q) { return Eigen::RowVectorXd(q.value.row(0)); };
  for (int l = 0; l < iterations; ++l) {
    Eigen::MatrixXd logits = (z * w(p.w_q)) * K.transpose() / std::sqrt(d);
    Eigen::MatrixXd a(logits.rows(), logits.cols());
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      Eigen::VectorXd e = (logits.col(j).array() - logits.col(j).maxCoeff()).exp();
      a.col(j) = e / e.sum();
    }
    a.array() += 1e-8;
    for (Eigen::Index i = 0; i < a.rows(); ++i) a.row(i) /= a.row(i).sum();
    const Eigen::MatrixXd x = a * V;
    Eigen::MatrixXd zg = sigmoid((x * w(p.gru.w_z) + z * w(p.gru.u_z)).rowwise() + b(p.gru.b_z));
    Eigen::MatrixXd rg = sigmoid((x * w(p.gru.w_r) + z * w(p.gru.u_r)).rowwise() + b(p.gru.b_r));
    Eigen::MatrixXd cand =
        ((x * w(p.gru.w_h) + rg.cwiseProduct(z) * w(p.gru.u_h)).rowwise() + b(p.gru.b_h)).array().tanh().matrix();
    z = (1.0 - zg.array()) * z.array() + zg.array() * cand.array();
  }
  return z;
}

SlotAttentionOptions options(AttentionVariant v, int iterations = 3) {
  SlotAttentionOptions o;
  o.variant = v;
  o.iterations = iterations;
  return o;
}

}  // namespace

TEST_CASE("softmax attention: single slot rows sum to one") {
  std::mt19937_64 rng(3);
  Tape t;
  Var a = softmax_attention(t.constant(random_matrix(1, 4, rng)), t.constant(random_matrix(6, 4, rng)));
  CHECK(std::abs(a.value().sum() - 1.0) < 1e-12);
}

TEST_CASE("softmax attention: constant logits spread mass evenly") {
  Tape t;
  Var a = softmax_attention(t.constant(Matrix::Zero(2, 3)), t.constant(Matrix::Ones(4, 3)));
  CHECK((a.value().array() - 0.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("slot attention: softmax variant matches a direct Eigen implementation") {
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix h = random_matrix(7, 6, rng);
    auto params = SlotAttentionParams::init(4, 6, rng);
    Tape t;
    auto out = run_slot_attention(t.constant(h), t.param(params.slot_init), params,
                                  options(AttentionVariant::softmax), false);
    CHECK((out.slots.value() - reference_softmax_slots(h, params, 3)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("slot attention: golden output of the softmax variant") {
  std::ifstream is(SMARTE_TEST_DATA "/slot_attention_softmax.txt");
  REQUIRE(is);
  int rows = 0, cols = 0;
  is >> rows >> cols;
  Matrix golden(rows, cols);
  for (Eigen::Index i = 0; i < golden.size(); ++i) is >> golden.data()[i];

  std::mt19937_64 rng(2024);
  const Matrix tokens = random_matrix(6, 8, rng);
  auto params = SlotAttentionParams::init(3, 8, rng);
  Tape t;
  auto out = run_slot_attention(t.constant(tokens), t.param(params.slot_init), params,
                                options(AttentionVariant::softmax), false);
  REQUIRE(out.slots.rows() == rows);
  CHECK((out.slots.value() - golden).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("slot attention: permuting initial slots permutes the output") {
  for (auto variant : {AttentionVariant::softmax, AttentionVariant::optimal_transport}) {
    std::mt19937_64 rng(11);
    const Matrix h = random_matrix(9, 8, rng);
    auto params = SlotAttentionParams::init(5, 8, rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
    perm.indices() << 3, 0, 4, 1, 2;
    Tape t;
    auto base = run_slot_attention(t.constant(h), t.constant(params.slot_init.value), params, options(variant), false);
    auto moved = run_slot_attention(t.constant(h), t.constant(perm * params.slot_init.value), params,
                                    options(variant), false);
    CHECK((perm * base.slots.value() - moved.slots.value()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((perm * base.maps.back().weights - moved.maps.back().weights).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("slot attention: one map per iteration, transport maps meet their marginals") {
  std::mt19937_64 rng(5);
  const Matrix h = random_matrix(10, 8, rng);
  auto params = SlotAttentionParams::init(15, 8, rng);
  auto opts = options(AttentionVariant::optimal_transport, 4);
  opts.sinkhorn.max_iters = 500;
  opts.sinkhorn.tol = 1e-10;
  Tape t;
  auto out = run_slot_attention(t.constant(h), t.param(params.slot_init), params, opts, false);
  REQUIRE(out.maps.size() == 4);
  for (int l = 0; l < 4; ++l) {
    const Matrix& a = out.maps[static_cast<std::size_t>(l)].weights;
    CHECK(out.maps[static_cast<std::size_t>(l)].iteration == l + 1);
    CHECK((a.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-8);
    CHECK((a.colwise().sum().array() - 1.5).abs().maxCoeff() < 1e-8);
  }
  CHECK_THROWS_AS(run_slot_attention(t.constant(h), t.param(params.slot_init), params,
                                     options(AttentionVariant::softmax, 0), false),
                  ConfigError);
}

TEST_CASE("slot attention: dropout only while training") {
  std::mt19937_64 rng(8);
  const Matrix h = random_matrix(6, 8, rng);
  auto params = SlotAttentionParams::init(4, 8, rng);
  auto opts = options(AttentionVariant::softmax);
  opts.dropout = 0.5;
  std::mt19937_64 drop(1);
  Tape t;
  auto eval = run_slot_attention(t.constant(h), t.param(params.slot_init), params, opts, false, &drop);
  auto again = run_slot_attention(t.constant(h), t.param(params.slot_init), params, opts, false, &drop);
  auto train = run_slot_attention(t.constant(h), t.param(params.slot_init), params, opts, true, &drop);
  CHECK(eval.slots.value() == again.slots.value());
  CHECK((train.slots.value() - eval.slots.value()).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("slot attention: full forward gradient w.r.t. W_Q, 10 tokens, k=15, T=3") {
  for (auto variant : {AttentionVariant::softmax, AttentionVariant::optimal_transport}) {
    double worst = 0;
    for (int seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(100 + seed);
      const Matrix h = random_matrix(10, 6, rng);
      auto params = SlotAttentionParams::init(15, 6, rng);
      const Matrix probe = probe_weights(15, 6, seed);
      auto opts = options(variant);
      Parameter* wq = &params.w_q;
      auto r = check_gradients(
          [&](Tape& t) {
            auto out = run_slot_attention(t.constant(h), t.param(params.slot_init), params, opts, false);
            return ad::sum(ad::mul_const(out.slots, probe));
          },
          std::span<Parameter* const>(&wq, 1));
      worst = std::max(worst, r.max_rel_error);
    }
    INFO(to_string(variant));
    CHECK(worst < 1e-4);
  }
}
