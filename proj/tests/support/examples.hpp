#pragma once

#include "latnet/network.hpp"

namespace fixtures {

using namespace latnet;

// Three nodes, node 2 latent and linked both ways to 0 and 1 with weight 0.5.
inline NetworkInstance example_e1() {
  Matrix g = Matrix::Zero(3, 3);
  g(0, 2) = g(2, 0) = g(1, 2) = g(2, 1) = 0.5;
  return make_instance(g, Vector::Constant(3, 2.0), Vector::Ones(3), {0, 1}, 1.5, 1.0);
}

inline NetworkInstance empty_graph(Index n, IndexList observable, double a = 2.0, double p_bar = 1.0) {
  return make_instance(Matrix::Zero(n, n), Vector::Constant(n, a), Vector::Ones(n),
                       std::move(observable), p_bar, 2.0);
}

inline GeneratorCommon common(Index nodes, std::uint64_t seed, double latent = 0.3) {
  GeneratorCommon c;
  c.n_nodes = nodes;
  c.seed = seed;
  c.latent_fraction = latent;
  return c;
}

}  // namespace fixtures
