#pragma once

// Brute-force reference for tiny row programs. Evaluates the objective
// straight from the data with plain loops and minimizes it over nested
// grids; shares nothing with the solver beyond the program's raw fields.

#include "latnet/conic.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using latnet::Index;
using latnet::Matrix;
using latnet::RowProgram;
using latnet::Vector;

// Objective with z set to its smallest feasible value.
inline double direct_objective(const RowProgram& p, const std::vector<double>& th) {
  const Matrix& x = p.design->x;
  const Index n = x.rows(), d = x.cols();
  double z = 0.0, base = 0.0;
  if (p.kind == RowProgram::Kind::dantzig_row) {
    std::vector<double> r(static_cast<std::size_t>(n));
    for (Index t = 0; t < n; ++t) {
      // r_t = y_t - (v - W p_t), with theta = (v, W) and p_t = x_t[1..]
      double fit = th[0];
      for (Index j = 1; j < d; ++j) fit -= th[static_cast<std::size_t>(j)] * x(t, j);
      r[static_cast<std::size_t>(t)] = p.response(t) - fit;
    }
    for (Index j = 0; j < d; ++j) {
      double lin = 0.0, sq = 0.0;
      for (Index t = 0; t < n; ++t) {
        double rt = r[static_cast<std::size_t>(t)];
        lin += rt * x(t, j);
        sq += rt * rt * x(t, j) * x(t, j);
      }
      z = std::max({z, std::abs(lin / n) / p.lambda, std::sqrt(sq / n)});
    }
    for (double v : th) base += std::abs(v);
    return base + p.tau * z;
  }
  std::vector<double> u(static_cast<std::size_t>(n), 0.0);
  double q = 0.0;
  for (Index t = 0; t < n; ++t) {
    for (Index j = 0; j < d; ++j) u[static_cast<std::size_t>(t)] += th[static_cast<std::size_t>(j)] * x(t, j);
    q += std::pow(u[static_cast<std::size_t>(t)], 4);
  }
  base = std::pow(q / n, 0.25);
  for (Index j = 0; j < d; ++j) {
    double unit = j == p.target ? 1.0 : 0.0;
    double lin = 0.0, sq = 0.0;
    for (Index t = 0; t < n; ++t) {
      lin += u[static_cast<std::size_t>(t)] * x(t, j);
      double e = u[static_cast<std::size_t>(t)] * x(t, j) - unit;
      sq += e * e;
    }
    z = std::max({z, std::abs(lin / n - unit) / p.lambda, std::sqrt(sq / n)});
  }
  return base + z;
}

struct GridResult {
  std::vector<double> theta;
  double objective;
};

// Full grid on [-box, box]^d, then repeated zooms around the incumbent.
inline GridResult grid_minimize(const RowProgram& p, double box = 5.0, double final_step = 1e-6) {
  const int d = static_cast<int>(p.design->x.cols());
  const int pts = d == 1 ? 401 : (d == 2 ? 81 : 31);
  std::vector<double> center(static_cast<std::size_t>(d), 0.0);
  double half = box;
  GridResult best{center, direct_objective(p, center)};
  while (true) {
    double step = 2.0 * half / (pts - 1);
    long total = 1;
    for (int i = 0; i < d; ++i) total *= pts;
    std::vector<double> th(static_cast<std::size_t>(d));
    GridResult round = best;
    for (long code = 0; code < total; ++code) {
      long c = code;
      for (int i = 0; i < d; ++i) {
        th[static_cast<std::size_t>(i)] = center[static_cast<std::size_t>(i)] - half + step * static_cast<double>(c % pts);
        c /= pts;
      }
      double f = direct_objective(p, th);
      if (f < round.objective) round = {th, f};
    }
    best = round;
    center = best.theta;
    if (step < final_step) break;
    half = 4.0 * step;
  }
  return best;
}

}  // namespace oracle
