#include "latnet/network.hpp"

#include "latnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace latnet {

IndexList NetworkInstance::latent() const {
  IndexList out;
  std::vector<bool> is_obs(static_cast<std::size_t>(size()), false);
  for (Index i : observable)
    if (i >= 0 && i < size()) is_obs[static_cast<std::size_t>(i)] = true;
  for (Index i = 0; i < size(); ++i)
    if (!is_obs[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

NetworkInstance make_instance(Matrix g, Vector a, Vector b, IndexList observable, double p_bar,
                              double zeta) {
  NetworkInstance inst;
  inst.labeling.resize(static_cast<std::size_t>(g.rows()));
  std::iota(inst.labeling.begin(), inst.labeling.end(), Index{0});
  inst.g = std::move(g);
  inst.a = std::move(a);
  inst.b = std::move(b);
  std::sort(observable.begin(), observable.end());
  inst.observable = std::move(observable);
  inst.p_bar = p_bar;
  inst.zeta = zeta;
  return inst;
}

std::string to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::negative_weight: return "negative_weight";
    case Violation::Kind::nonzero_diagonal: return "nonzero_diagonal";
    case Violation::Kind::row_dominance: return "row_dominance";
    case Violation::Kind::column_dominance: return "column_dominance";
    case Violation::Kind::outside_option: return "outside_option";
    case Violation::Kind::partition: return "partition";
    case Violation::Kind::nonpositive_parameter: return "nonpositive_parameter";
  }
  return "unknown";
}

ValidationReport validate(const NetworkInstance& inst) {
  const Index n = inst.g.rows();
  if (inst.g.cols() != n || inst.a.size() != n || inst.b.size() != n)
    throw StructuralError("validate: g must be square and a, b must have one entry per node");
  if (!inst.labeling.empty() && static_cast<Index>(inst.labeling.size()) != n)
    throw StructuralError("validate: labeling must have one entry per node");

  ValidationReport rep;
  auto add = [&](Violation::Kind k, Index node, double margin) {
    rep.ok = false;
    rep.violations.push_back({k, node, margin});
  };

  for (Index i = 0; i < n; ++i) {
    if (inst.g(i, i) != 0.0) add(Violation::Kind::nonzero_diagonal, i, std::abs(inst.g(i, i)));
    for (Index j = 0; j < n; ++j)
      if (inst.g(i, j) < 0.0) add(Violation::Kind::negative_weight, i, -inst.g(i, j));
  }
  if (!(inst.zeta > 0.0)) add(Violation::Kind::nonpositive_parameter, -1, -inst.zeta);
  if (!(inst.p_bar > 0.0)) add(Violation::Kind::nonpositive_parameter, -1, -inst.p_bar);
  for (Index i = 0; i < n; ++i) {
    if (!(inst.a(i) > 0.0)) add(Violation::Kind::nonpositive_parameter, i, -inst.a(i));
    if (!(inst.b(i) > 0.0)) add(Violation::Kind::nonpositive_parameter, i, -inst.b(i));
    double row = inst.g.row(i).sum();
    double col = inst.g.col(i).sum();
    double row_gap = 2.0 * inst.b(i) - row - inst.zeta;
    double col_gap = 2.0 * inst.b(i) - col - inst.zeta;
    if (row_gap < 0.0) add(Violation::Kind::row_dominance, i, -row_gap);
    if (col_gap < 0.0) add(Violation::Kind::column_dominance, i, -col_gap);
    if (!(inst.a(i) > inst.p_bar)) add(Violation::Kind::outside_option, i, inst.p_bar - inst.a(i));
  }

  // Partition: observable ids sorted, unique, in range and non-empty.
  const auto& obs = inst.observable;
  if (obs.empty()) add(Violation::Kind::partition, -1, 1.0);
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (obs[k] < 0 || obs[k] >= n) add(Violation::Kind::partition, obs[k], 1.0);
    if (k > 0 && obs[k] <= obs[k - 1]) add(Violation::Kind::partition, obs[k], 1.0);
  }
  return rep;
}

namespace {

Matrix checked_inverse(const Matrix& a, const char* what) {
  if (a.size() == 0) return Matrix(0, 0);
  Eigen::PartialPivLU<Matrix> lu(a);
  Matrix inv = lu.inverse();
  double cond = condition_1(a, inv);
  if (!std::isfinite(cond) || cond > kSingularCondition) {
    std::ostringstream os;
    os << "derive: " << what << " is numerically singular (condition estimate " << cond
       << "); dominance gap may be mis-declared";
    throw SingularityError(os.str());
  }
  return inv;
}

}  // namespace

DerivedMatrices derive(const NetworkInstance& inst) {
  auto rep = validate(inst);
  if (!rep.ok) {
    std::ostringstream os;
    os << "derive: instance violates model invariants (" << rep.violations.size()
       << " violations, first: " << to_string(rep.violations.front().kind) << " at node "
       << rep.violations.front().node << ")";
    throw ModelError(os.str());
  }

  DerivedMatrices d;
  d.observable = inst.observable;
  d.latent = inst.latent();
  d.a = inst.a;
  d.p_bar = inst.p_bar;
  d.zeta = inst.zeta;

  d.m = Matrix((2.0 * inst.b).asDiagonal()) - inst.g;
  d.m_inv = checked_inverse(d.m, "M");

  const auto& O = d.observable;
  const auto& L = d.latent;
  Matrix m_oo = submatrix(d.m, O, O);
  Matrix m_ol = submatrix(d.m, O, L);
  Matrix m_lo = submatrix(d.m, L, O);
  Matrix m_ll = submatrix(d.m, L, L);

  d.m_ll_inv = checked_inverse(m_ll, "M_LL");
  d.s_ol = m_ol * d.m_ll_inv;
  d.s_lo = d.m_ll_inv * m_lo;
  d.h = m_oo - m_ol * d.s_lo;
  Matrix h_inv_direct = checked_inverse(d.h, "H");

  d.h_inv = submatrix(d.m_inv, O, O);
  double disagreement = max_abs(d.h_inv - h_inv_direct);
  if (disagreement > 1e-9 * std::max(1.0, max_abs(d.h_inv))) {
    std::ostringstream os;
    os << "derive: block inverse and direct inverse of H disagree by " << disagreement;
    throw NumericError(os.str());
  }

  Vector a_o = subvector(inst.a, O);
  Vector a_l = subvector(inst.a, L);
  Vector shifted = a_l - Vector::Constant(a_l.size(), inst.p_bar);
  d.v_o = d.h_inv * (a_o - d.s_ol * shifted);
  return d;
}

Matrix assemble_inverse_from_blocks(const DerivedMatrices& d) {
  const auto& O = d.observable;
  const auto& L = d.latent;
  const Index n = static_cast<Index>(O.size() + L.size());
  Matrix out(n, n);
  Matrix ol = -d.h_inv * d.s_ol;
  Matrix lo = -d.s_lo * d.h_inv;
  Matrix ll = d.m_ll_inv + d.s_lo * d.h_inv * d.s_ol;
  for (std::size_t i = 0; i < O.size(); ++i) {
    for (std::size_t j = 0; j < O.size(); ++j) out(O[i], O[j]) = d.h_inv(i, j);
    for (std::size_t j = 0; j < L.size(); ++j) out(O[i], L[j]) = ol(i, j);
  }
  for (std::size_t i = 0; i < L.size(); ++i) {
    for (std::size_t j = 0; j < O.size(); ++j) out(L[i], O[j]) = lo(i, j);
    for (std::size_t j = 0; j < L.size(); ++j) out(L[i], L[j]) = ll(i, j);
  }
  return out;
}

double spectral_radius_estimate(const Matrix& a, int squarings) {
  if (a.size() == 0) return 0.0;
  // ||A^(2^k)||^(1/2^k) decreases to rho(A); track the log scale to avoid overflow.
  Matrix p = a.cwiseAbs();
  double log_scale = 0.0;  // p_true = exp(log_scale) * p
  double best = norm_inf(p);
  for (int k = 1; k <= squarings; ++k) {
    double nrm = norm_inf(p);
    if (nrm == 0.0) return 0.0;
    p /= nrm;
    log_scale += std::log(nrm);
    p = (p * p).eval();
    log_scale *= 2.0;
    double est = std::exp((log_scale + std::log(std::max(norm_inf(p), 1e-300))) / std::ldexp(1.0, k));
    best = std::min(best, est);
  }
  return best;
}

Vector bonacich(double alpha, const Matrix& g) {
  if (g.rows() != g.cols()) throw StructuralError("bonacich: matrix must be square");
  const Index n = g.rows();
  if (n == 0) return Vector(0);
  Matrix ag = alpha * g;
  double rho = spectral_radius_estimate(ag);
  if (rho >= 1.0) {
    std::ostringstream os;
    os << "bonacich: spectral radius of alpha*G is " << rho << " >= 1";
    throw DivergenceError(os.str());
  }
  Matrix inv = (Matrix::Identity(n, n) - ag).partialPivLu().inverse();
  if (inv.minCoeff() < -1e-12)
    throw ModelError("bonacich: (I - alpha G)^{-1} has a negative entry; centrality undefined");
  return inv * Vector::Ones(n);
}

double realized_gap(const Matrix& g, const Vector& b) {
  double gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < g.rows(); ++i) {
    gap = std::min(gap, 2.0 * b(i) - g.row(i).sum());
    gap = std::min(gap, 2.0 * b(i) - g.col(i).sum());
  }
  return gap;
}

Eigen::MatrixXi hop_distances(const Matrix& g) {
  const Index n = g.rows();
  Eigen::MatrixXi dist = Eigen::MatrixXi::Constant(n, n, -1);
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j && g(i, j) > 0.0) out[static_cast<std::size_t>(i)].push_back(j);
  for (Index s = 0; s < n; ++s) {
    std::deque<Index> q{s};
    dist(s, s) = 0;
    while (!q.empty()) {
      Index u = q.front();
      q.pop_front();
      for (Index v : out[static_cast<std::size_t>(u)]) {
        if (dist(s, v) < 0) {
          dist(s, v) = dist(s, u) + 1;
          q.push_back(v);
        }
      }
    }
  }
  return dist;
}

double GrowthBound::at(Index k) const {
  auto kd = static_cast<double>(k);
  if (family == Family::exponential) return constant * std::pow(degree, kd);
  return constant * std::pow(kd, degree);
}

bool satisfies_growth(const Matrix& g, const GrowthBound& growth) {
  const Index n = g.rows();
  Eigen::MatrixXi dist = hop_distances(g);
  for (Index i = 0; i < n; ++i) {
    // Count nodes by the smaller of the two directed distances.
    std::vector<Index> count(static_cast<std::size_t>(n + 1), 0);
    for (Index j = 0; j < n; ++j) {
      int out = dist(i, j);
      int in = dist(j, i);
      int r = out < 0 ? in : (in < 0 ? out : std::min(out, in));
      if (r >= 0) ++count[static_cast<std::size_t>(r)];
    }
    Index cumulative = count[0];
    for (Index k = 1; k <= n; ++k) {
      cumulative += count[static_cast<std::size_t>(k)];
      if (static_cast<double>(cumulative) > growth.at(k) + 1e-9) return false;
    }
  }
  return true;
}

bool strongly_connected(const Matrix& g) {
  Eigen::MatrixXi dist = hop_distances(g);
  return (dist.array() >= 0).all();
}

NetworkInstance relabel(const NetworkInstance& inst, const IndexList& perm) {
  const Index n = inst.size();
  if (static_cast<Index>(perm.size()) != n) throw StructuralError("relabel: permutation size");
  NetworkInstance out = inst;
  for (Index i = 0; i < n; ++i) {
    out.a(perm[i]) = inst.a(i);
    out.b(perm[i]) = inst.b(i);
    out.labeling[static_cast<std::size_t>(perm[i])] =
        inst.labeling.empty() ? i : inst.labeling[static_cast<std::size_t>(i)];
    for (Index j = 0; j < n; ++j) out.g(perm[i], perm[j]) = inst.g(i, j);
  }
  out.observable.clear();
  for (Index i : inst.observable) out.observable.push_back(perm[i]);
  std::sort(out.observable.begin(), out.observable.end());
  return out;
}

}  // namespace latnet
