#pragma once

// Central finite differences against the analytic gradient.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ppdl/network.hpp"
#include "ppdl/rng.hpp"

namespace gradcheck {

struct Result {
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t kinks = 0;
};

// Components where both gradients are below `floor` in magnitude are compared
// against `floor` rather than their own size; finite differences cannot
// resolve relative error there.
//
// A ReLU or max-pool switch inside [w - step, w + step] shows up as one-sided
// slopes that disagree; the step is then shrunk until the interval is smooth.
inline Result check(ppdl::nn::Network net, const std::vector<std::vector<double>>& batch,
                    const std::vector<std::uint32_t>& labels, double step = 1e-5, double floor = 1e-6) {
  const auto analytic = ppdl::nn::loss_and_gradient(net, batch, labels).grad;
  const double base = ppdl::nn::batch_loss(net, batch, labels);
  Result r;
  auto params = net.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    double numeric = 0;
    for (double h = step; h >= step * 1e-3; h /= 10) {
      params[i] = saved + h;
      const double up = ppdl::nn::batch_loss(net, batch, labels);
      params[i] = saved - h;
      const double down = ppdl::nn::batch_loss(net, batch, labels);
      params[i] = saved;
      numeric = (up - down) / (2 * h);
      const double forward = (up - base) / h;
      const double backward = (base - down) / h;
      const double spread = std::abs(forward - backward);
      if (spread <= 1e-4 * std::max({std::abs(forward), std::abs(backward), 1e-3})) break;
      if (h == step) ++r.kinks;
    }
    const double abs_err = std::abs(analytic[i] - numeric);
    const double rel = abs_err / std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    if (rel > r.max_rel_error) {
      r.max_rel_error = rel;
      r.worst_index = i;
    }
    r.max_abs_error = std::max(r.max_abs_error, abs_err);
    ++r.checked;
  }
  return r;
}

// Random inputs in [0, 1] and random labels for a net.
inline void random_batch(const ppdl::nn::Network& net, std::size_t count, std::uint64_t seed,
                         std::vector<std::vector<double>>& batch, std::vector<std::uint32_t>& labels) {
  ppdl::Rng rng(seed);
  batch.assign(count, std::vector<double>(net.input_shape().size()));
  labels.resize(count);
  for (std::size_t b = 0; b < count; ++b) {
    for (auto& v : batch[b]) v = rng.uniform();
    labels[b] = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(net.num_classes())));
  }
}

}  // namespace gradcheck
