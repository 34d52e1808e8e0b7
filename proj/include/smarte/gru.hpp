#pragma once

#include <random>
#include <string>
#include <vector>

#include "smarte/autodiff.hpp"

namespace smarte {

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, std::mt19937_64& rng);

/// Gate weights for a row-wise GRU over d-wide states. Inputs multiply W_*,
/// previous states multiply U_*; biases are 1 x d rows.
struct GruParams {
  Parameter w_z, u_z, b_z;
  Parameter w_r, u_r, b_r;
  Parameter w_h, u_h, b_h;

  static GruParams init(Eigen::Index d, std::mt19937_64& rng, const std::string& prefix = "gru");
  static GruParams zeros(Eigen::Index d, const std::string& prefix = "gru");
  std::vector<Parameter*> all();
};

/// h = (1 - z) * h_prev + z * h~, with z = sigmoid(x W_z + h_prev U_z + b_z),
/// r = sigmoid(x W_r + h_prev U_r + b_r), h~ = tanh(x W_h + (r * h_prev) U_h + b_h).
Var gru_cell(const Var& h_prev, const Var& x, GruParams& params);

}  // namespace smarte
