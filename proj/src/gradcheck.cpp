#include "smarte/gradcheck.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <unordered_map>
#include <vector>

namespace smarte {

GradCheckResult check_gradients(const std::function<Var(Tape&)>& loss_fn, std::span<Parameter* const> params,
                                const GradCheckOptions& opts) {
  std::unordered_map<const Parameter*, Matrix> analytic;
  {
    Tape tape;
    Var loss = loss_fn(tape);
    tape.backward_local(loss);
    for (auto [p, g] : tape.param_grads()) analytic[p] = *g;
  }

  auto eval = [&]() {
    Tape tape;
    return loss_fn(tape).scalar();
  };

  std::mt19937_64 rng(opts.seed);
  GradCheckResult result;
  for (Parameter* p : params) {
    const Eigen::Index size = p->value.size();
    Matrix a = analytic.count(p) ? analytic[p] : Matrix::Zero(p->value.rows(), p->value.cols());

    std::vector<Eigen::Index> probe(static_cast<std::size_t>(size));
    std::iota(probe.begin(), probe.end(), Eigen::Index{0});
    if (opts.max_entries_per_param > 0 && size > opts.max_entries_per_param) {
      std::shuffle(probe.begin(), probe.end(), rng);
      probe.resize(static_cast<std::size_t>(opts.max_entries_per_param));
    }

    double max_diff = 0.0, scale_a = 0.0, scale_n = 0.0;
    for (Eigen::Index idx : probe) {
      double& x = p->value.data()[idx];
      const double saved = x;
      x = saved + opts.step;
      const double up = eval();
      x = saved - opts.step;
      const double down = eval();
      x = saved;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double an = a.data()[idx];
      max_diff = std::max(max_diff, std::abs(an - numeric));
      scale_a = std::max(scale_a, std::abs(an));
      scale_n = std::max(scale_n, std::abs(numeric));
    }
    const double scale = std::max(scale_a, scale_n);
    const double rel = scale > 0.0 ? max_diff / scale : 0.0;
    if (rel >= result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_param = p->name;
    }
  }
  return result;
}

}  // namespace smarte
