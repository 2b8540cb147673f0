#pragma once

#include <cstddef>
#include <vector>

namespace levyap {

// Gauss-Legendre rule mapped to [0, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

// Cached, thread-safe. n >= 1.
const GaussRule& gauss_legendre(std::size_t n);

}  // namespace levyap
