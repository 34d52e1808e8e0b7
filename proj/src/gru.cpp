#include "smarte/gru.hpp"

#include <cmath>

#include "smarte/ops.hpp"

namespace smarte {

Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

GruParams GruParams::init(Eigen::Index d, std::mt19937_64& rng, const std::string& prefix) {
  auto w = [&](const char* name) { return Parameter(prefix + "." + name, uniform_init(d, d, d, rng)); };
  auto b = [&](const char* name) { return Parameter(prefix + "." + name, Matrix::Zero(1, d)); };
  return GruParams{w("w_z"), w("u_z"), b("b_z"), w("w_r"), w("u_r"), b("b_r"),
                   w("w_h"), w("u_h"), b("b_h")};
}

GruParams GruParams::zeros(Eigen::Index d, const std::string& prefix) {
  auto z = [&](const char* name, Eigen::Index rows) { return Parameter(prefix + "." + name, Matrix::Zero(rows, d)); };
  return GruParams{z("w_z", d), z("u_z", d), z("b_z", 1), z("w_r", d), z("u_r", d), z("b_r", 1),
                   z("w_h", d), z("u_h", d), z("b_h", 1)};
}

std::vector<Parameter*> GruParams::all() {
  return {&w_z, &u_z, &b_z, &w_r, &u_r, &b_r, &w_h, &u_h, &b_h};
}

Var gru_cell(const Var& h_prev, const Var& x, GruParams& p) {
  if (h_prev.rows() != x.rows()) throw DimensionError("gru_cell: row counts of state and input differ");
  if (h_prev.cols() != p.u_z.value.rows() || x.cols() != p.w_z.value.rows()) {
    throw DimensionError("gru_cell: state/input width does not match gate weights");
  }
  Tape& t = *h_prev.tape();
  using namespace ad;
  auto gate = [&](Parameter& w, Parameter& u, Parameter& b, const Var& h) {
    return add_rowvec(add(matmul(x, t.param(w)), matmul(h, t.param(u))), t.param(b));
  };
  Var z = sigmoid(gate(p.w_z, p.u_z, p.b_z, h_prev));
  Var r = sigmoid(gate(p.w_r, p.u_r, p.b_r, h_prev));
  Var cand = tanh(gate(p.w_h, p.u_h, p.b_h, mul(r, h_prev)));
  // (1 - z) * h_prev + z * cand == h_prev + z * (cand - h_prev)
  return add(h_prev, mul(z, sub(cand, h_prev)));
}

}  // namespace smarte
