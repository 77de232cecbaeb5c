#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dppsd/channel.hpp"
#include "dppsd/numerics.hpp"
#include "dppsd/special.hpp"

namespace dppsd {

/// Reduced-domain closest-point problem: minimize ||z - R x||^2 over x in S^{N_t}
/// subject to ||z - R x||^2 <= squared_radius. Row N_t - 1 of R is the tree root.
template <typename Real = double>
struct SearchProblem {
  ComplexVectorT<Real> z;
  ComplexMatrixT<Real> r;
  ComplexVectorT<Real> symbols;
  Real squared_radius = std::numeric_limits<Real>::infinity();
  OpCounter counter;

  static SearchProblem make(ComplexVectorT<Real> z, ComplexMatrixT<Real> r, const Constellation& constellation,
                            Real squared_radius = std::numeric_limits<Real>::infinity()) {
    if (r.rows() != r.cols() || r.rows() != z.size()) throw DimensionMismatch("SearchProblem: z and R disagree");
    if (!(squared_radius >= Real(0))) throw InvalidConfig("SearchProblem: squared radius must be >= 0");
    SearchProblem p;
    p.z = std::move(z);
    p.r = std::move(r);
    p.symbols.resize(constellation.size());
    for (int q = 0; q < constellation.size(); ++q) p.symbols(q) = std::complex<Real>(constellation.symbol(q));
    p.squared_radius = squared_radius;
    return p;
  }

  int layers() const noexcept { return static_cast<int>(z.size()); }
  int alphabet_size() const noexcept { return static_cast<int>(symbols.size()); }
};

template <typename Real = double>
struct SearchOutcome {
  std::optional<ComplexVectorT<Real>> solution;
  std::vector<int> indices;  // symbol indices of `solution`, empty when none
  std::optional<Real> metric;
  std::uint64_t nodes_visited = 0;
  std::uint64_t leaf_count = 0;
  int subtrees_searched = 0;
  bool terminated_early = false;
  std::vector<Real> incumbent_history;  // metric of every accepted leaf, in order

  bool found() const noexcept { return metric.has_value(); }
};

/// State handed to the early-stop hook after a root sub-tree is finished.
struct SubtreeProgress {
  int completed = 0;  // sub-trees processed so far, 1-based count
  double radius_sq = 0;
  bool has_incumbent = false;
};

using EarlyStop = std::function<bool(const SubtreeProgress&)>;

/// |z_row - sum_{k >= row} r_{row,k} x_k|^2 where `partial` fixes x_row .. x_{N_t-1}.
template <typename Real>
Real branch_metric(SearchProblem<Real>& problem, int row, const ComplexVectorT<Real>& partial) {
  const int n = problem.layers();
  std::complex<Real> e = problem.z(row);
  for (int k = row; k < n; ++k) e -= problem.r(row, k) * partial(k);
  problem.counter.mul(static_cast<std::uint64_t>(n - row));
  problem.counter.add(static_cast<std::uint64_t>(n - row));
  problem.counter.abs2();
  return std::norm(e);
}

/// All symbols at `row` in ascending branch-metric order (ties by index), with
/// x_{row+1} .. x_{N_t-1} taken from `partial_above`.
template <typename Real>
std::vector<int> se_child_order(SearchProblem<Real>& problem, int row, const ComplexVectorT<Real>& partial_above) {
  const int m = problem.alphabet_size();
  ComplexVectorT<Real> x = partial_above;
  std::vector<Real> metric(static_cast<std::size_t>(m));
  for (int q = 0; q < m; ++q) {
    x(row) = problem.symbols(q);
    metric[static_cast<std::size_t>(q)] = branch_metric(problem, row, x);
  }
  std::vector<int> order(static_cast<std::size_t>(m));
  for (int q = 0; q < m; ++q) order[static_cast<std::size_t>(q)] = q;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return metric[static_cast<std::size_t>(a)] < metric[static_cast<std::size_t>(b)];
  });
  return order;
}

namespace detail {

/// Depth-first Schnorr-Euchner enumeration with incumbent radius shrinking.
///
/// Per node expansion at row l the counter is charged (N_t - 1 - l) mults and
/// adds for interference cancellation, then 2 mults and 3 adds per child
/// (r_ll s_q, subtraction, |.|^2, accumulation).
template <typename Real>
class DepthFirstEngine {
public:
  explicit DepthFirstEngine(SearchProblem<Real>& problem)
      : p_(problem), n_(problem.layers()), m_(problem.alphabet_size()),
        idx_(static_cast<std::size_t>(n_), 0), order_(static_cast<std::size_t>(n_ * m_)),
        metric_(static_cast<std::size_t>(n_ * m_)), cursor_(static_cast<std::size_t>(n_), 0) {}

  /// Searches the root sub-trees in `roots` (SE order when empty) under `radius_sq`.
  SearchOutcome<Real> run(std::span<const int> roots, Real radius_sq, const EarlyStop& early_stop) {
    SearchOutcome<Real> out;
    bound_ = radius_sq;
    has_incumbent_ = false;

    expand(n_ - 1, Real(0));
    const std::size_t root_base = static_cast<std::size_t>((n_ - 1) * m_);
    std::vector<Real> root_metric(static_cast<std::size_t>(m_));
    for (int k = 0; k < m_; ++k)
      root_metric[static_cast<std::size_t>(order_[root_base + k])] = metric_[root_base + k];

    const bool se_order = roots.empty();
    std::vector<int> se_roots;
    if (se_order) {
      se_roots.assign(order_.begin() + static_cast<std::ptrdiff_t>(root_base),
                      order_.begin() + static_cast<std::ptrdiff_t>(root_base + m_));
      roots = se_roots;
    }

    const int count = static_cast<int>(roots.size());
    for (int p = 0; p < count; ++p) {
      const int q = roots[static_cast<std::size_t>(p)];
      const Real rm = root_metric[static_cast<std::size_t>(q)];
      if (inside(rm)) {
        search_subtree(q, rm, out);
      } else if (se_order) {
        // Remaining roots have larger metrics.
        out.subtrees_searched = count;
        break;
      }
      out.subtrees_searched = p + 1;
      if (early_stop && p + 1 < count &&
          early_stop(SubtreeProgress{p + 1, static_cast<double>(bound_), has_incumbent_})) {
        out.terminated_early = true;
        break;
      }
    }

    if (has_incumbent_) {
      out.metric = bound_;
      out.indices = best_;
      ComplexVectorT<Real> x(n_);
      for (int k = 0; k < n_; ++k) x(k) = p_.symbols(best_[static_cast<std::size_t>(k)]);
      out.solution = std::move(x);
    }
    return out;
  }

private:
  bool inside(Real m) const noexcept { return has_incumbent_ ? m < bound_ : m <= bound_; }

  void expand(int row, Real parent) {
    std::complex<Real> center = p_.z(row);
    for (int k = row + 1; k < n_; ++k) center -= p_.r(row, k) * p_.symbols(idx_[static_cast<std::size_t>(k)]);
    const auto above = static_cast<std::uint64_t>(n_ - 1 - row);
    p_.counter.mul(above);
    p_.counter.add(above);

    const Real diag = p_.r(row, row).real();
    const std::size_t base = static_cast<std::size_t>(row * m_);
    for (int q = 0; q < m_; ++q) {
      const Real m = parent + std::norm(center - diag * p_.symbols(q));
      // Insertion sort keeps equal metrics in index order.
      int pos = q;
      while (pos > 0 && metric_[base + pos - 1] > m) {
        metric_[base + pos] = metric_[base + pos - 1];
        order_[base + pos] = order_[base + pos - 1];
        --pos;
      }
      metric_[base + pos] = m;
      order_[base + pos] = q;
    }
    p_.counter.mul(2 * static_cast<std::uint64_t>(m_));
    p_.counter.add(3 * static_cast<std::uint64_t>(m_));
  }

  void accept_leaf(Real m, SearchOutcome<Real>& out) {
    bound_ = m;
    has_incumbent_ = true;
    best_ = idx_;
    ++out.leaf_count;
    out.incumbent_history.push_back(m);
  }

  void search_subtree(int root, Real root_metric, SearchOutcome<Real>& out) {
    ++out.nodes_visited;
    idx_[static_cast<std::size_t>(n_ - 1)] = root;
    if (n_ == 1) {
      accept_leaf(root_metric, out);
      return;
    }
    const int top = n_ - 2;
    int row = top;
    expand(row, root_metric);
    cursor_[static_cast<std::size_t>(row)] = 0;
    for (;;) {
      auto& cur = cursor_[static_cast<std::size_t>(row)];
      if (cur < m_) {
        const std::size_t slot = static_cast<std::size_t>(row * m_ + cur);
        const Real m = metric_[slot];
        if (inside(m)) {
          ++out.nodes_visited;
          idx_[static_cast<std::size_t>(row)] = order_[slot];
          if (row == 0) {
            // Later siblings cannot strictly improve on this leaf.
            accept_leaf(m, out);
            cur = m_;
          } else {
            --row;
            expand(row, m);
            cursor_[static_cast<std::size_t>(row)] = 0;
          }
          continue;
        }
        cur = m_;
      }
      if (row == top) break;
      ++row;
      ++cursor_[static_cast<std::size_t>(row)];
    }
  }

  SearchProblem<Real>& p_;
  int n_;
  int m_;
  std::vector<int> idx_;
  std::vector<int> best_;
  std::vector<int> order_;
  std::vector<Real> metric_;
  std::vector<int> cursor_;
  Real bound_ = 0;
  bool has_incumbent_ = false;
};

}  // namespace detail

/// Depth-first SE sphere decoding. The root layer is visited in `subtree_order`
/// (a permutation of symbol indices) when given, otherwise in SE order.
/// `early_stop` is consulted after every finished root sub-tree except the last.
template <typename Real>
SearchOutcome<Real> sphere_decode(SearchProblem<Real>& problem, std::span<const int> subtree_order = {},
                                  const EarlyStop& early_stop = {}) {
  const int m = problem.alphabet_size();
  if (!subtree_order.empty()) {
    if (static_cast<int>(subtree_order.size()) != m)
      throw InvalidConfig("sphere_decode: subtree order must list every symbol");
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    for (int q : subtree_order) {
      if (q < 0 || q >= m || seen[static_cast<std::size_t>(q)])
        throw InvalidConfig("sphere_decode: subtree order is not a permutation");
      seen[static_cast<std::size_t>(q)] = 1;
    }
  }
  detail::DepthFirstEngine<Real> engine(problem);
  return engine.run(subtree_order, problem.squared_radius, early_stop);
}

/// min ||z - R x||^2 over x with x_{N_t-1} = s_root, ignoring the problem radius.
template <typename Real>
Real subtree_min_metric(SearchProblem<Real>& problem, int root_index) {
  if (root_index < 0 || root_index >= problem.alphabet_size())
    throw InvalidConfig("subtree_min_metric: root index out of range");
  detail::DepthFirstEngine<Real> engine(problem);
  const int roots[1] = {root_index};
  const auto out = engine.run(roots, std::numeric_limits<Real>::infinity(), {});
  return *out.metric;
}

inline constexpr double kOracleGuard = 1e7;

/// Exhaustive ML search over S^{N_t}; ties go to the lexicographically smallest
/// index vector (x_0 most significant). Ignores the problem radius.
template <typename Real>
SearchOutcome<Real> ml_oracle(const SearchProblem<Real>& problem) {
  const int n = problem.layers();
  const int m = problem.alphabet_size();
  if (std::pow(static_cast<double>(m), n) > kOracleGuard) throw TooLarge("ml_oracle: |S|^N_t exceeds 1e7");

  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  ComplexVectorT<Real> x(n);
  SearchOutcome<Real> out;
  Real best = std::numeric_limits<Real>::infinity();
  for (;;) {
    for (int k = 0; k < n; ++k) x(k) = problem.symbols(idx[static_cast<std::size_t>(k)]);
    const Real d = (problem.z - problem.r * x).squaredNorm();
    ++out.nodes_visited;
    if (d < best) {
      best = d;
      out.indices = idx;
    }
    int k = n - 1;
    while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == m) idx[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
  }
  out.leaf_count = out.nodes_visited;
  out.metric = best;
  ComplexVectorT<Real> sol(n);
  for (int k = 0; k < n; ++k) sol(k) = problem.symbols(out.indices[static_cast<std::size_t>(k)]);
  out.solution = std::move(sol);
  out.subtrees_searched = m;
  return out;
}

/// Noise-based initial radius f with P(||v||^2 <= f^2) = epsilon_complement for
/// v ~ CN(0, noise_variance I_{N_r}): f^2 = (sigma^2 / 2) chi2^{-1}_{2 N_r}(p).
inline double conventional_radius(double noise_variance, int n_r, double epsilon_complement) {
  if (!(noise_variance > 0.0)) throw InvalidConfig("conventional_radius: noise variance must be > 0");
  if (!(epsilon_complement > 0.0 && epsilon_complement < 1.0))
    throw InvalidConfig("conventional_radius: need 0 < epsilon_complement < 1");
  return std::sqrt(0.5 * noise_variance * chi_square_quantile(epsilon_complement, 2.0 * n_r));
}

/// d~^2 = f^2 - ||Q_2^H y||^2, floored at zero.
inline double reduced_squared_radius(double radius, double residual_offset) {
  return std::max(radius * radius - residual_offset, 0.0);
}

}  // namespace dppsd
