#include "matcher/optimal_transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "matcher/error.hpp"

namespace matcher {

namespace {

constexpr double kReducedCostTolerance = 1e-12;
constexpr double kDegenerateStep = 1e-15;
// Consecutive degenerate pivots before switching to Bland's rule.
constexpr int kStallLimit = 32;

void validate(const OTProblem& p) {
  const auto check = [](const std::vector<double>& w, const char* name) {
    if (w.empty()) fail(ErrorCode::kInfeasibleWeights, std::string(name) + " is empty");
    double sum = 0.0;
    for (double v : w) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        fail(ErrorCode::kInfeasibleWeights, std::string(name) + " has a negative or non-finite weight");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kWeightTolerance) {
      fail(ErrorCode::kInfeasibleWeights,
           std::string(name) + " sums to " + std::to_string(sum) + ", expected 1");
    }
  };
  check(p.supply, "supply");
  check(p.demand, "demand");
  if (p.cost.size() != p.supply.size() * p.demand.size()) {
    fail(ErrorCode::kDimMismatch, "cost matrix does not match supply x demand");
  }
  for (double c : p.cost) {
    if (!std::isfinite(c)) fail(ErrorCode::kInvalidArgument, "non-finite transport cost");
  }
}

// Spanning-tree basis of the bipartite graph rows [0, n) + columns [n, n+m).
class TransportSimplex {
 public:
  explicit TransportSimplex(const OTProblem& p)
      : p_(p), n_(static_cast<int>(p.supply.size())), m_(static_cast<int>(p.demand.size())) {}

  TransportPlan run() {
    initial_basis();
    int stalled = 0;
    int pivots = 0;
    const long long pivot_cap = 50LL * (n_ + m_) * (n_ + m_) + 10000;
    for (;;) {
      compute_potentials();
      const bool bland = stalled >= kStallLimit;
      int enter_i = -1;
      int enter_j = -1;
      double best = -kReducedCostTolerance;
      for (int i = 0; i < n_ && !(bland && enter_i >= 0); ++i) {
        for (int j = 0; j < m_; ++j) {
          const double r = p_.cost_at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) -
                           u_[static_cast<std::size_t>(i)] - v_[static_cast<std::size_t>(j)];
          if (r < best && !is_basic(i, j)) {
            enter_i = i;
            enter_j = j;
            if (bland) break;
            best = r;
          }
        }
      }
      if (enter_i < 0) break;
      const double step = pivot(enter_i, enter_j, bland);
      stalled = step <= kDegenerateStep ? stalled + 1 : 0;
      if (++pivots > pivot_cap) {
        fail(ErrorCode::kInvalidArgument, "transport simplex exceeded its pivot budget");
      }
    }

    TransportPlan plan;
    plan.pivots = pivots;
    for (const auto& cell : basis_) {
      const double mass = std::max(cell.mass, 0.0);
      plan.cost += mass * p_.cost_at(static_cast<std::size_t>(cell.i), static_cast<std::size_t>(cell.j));
      plan.flows.push_back({cell.i, cell.j, mass});
    }
    return plan;
  }

 private:
  struct Cell {
    int i;
    int j;
    double mass;
  };

  bool is_basic(int i, int j) const {
    return basic_index_[static_cast<std::size_t>(i) * m_ + j] >= 0;
  }

  void add_basic(int i, int j, double mass) {
    basic_index_[static_cast<std::size_t>(i) * m_ + j] = static_cast<int>(basis_.size());
    basis_.push_back({i, j, mass});
  }

  // Least-cost start. Every allocation retires exactly one row or column
  // (the last retires both), which yields n+m-1 basic cells forming a tree.
  void initial_basis() {
    basic_index_.assign(static_cast<std::size_t>(n_) * m_, -1);
    std::vector<int> order(static_cast<std::size_t>(n_) * m_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return p_.cost[static_cast<std::size_t>(a)] < p_.cost[static_cast<std::size_t>(b)]; });
    std::vector<double> rem_s = p_.supply;
    std::vector<double> rem_d = p_.demand;
    std::vector<char> row_done(static_cast<std::size_t>(n_), 0);
    std::vector<char> col_done(static_cast<std::size_t>(m_), 0);
    int rows_left = n_;
    int cols_left = m_;
    for (int flat : order) {
      const int i = flat / m_;
      const int j = flat % m_;
      if (row_done[static_cast<std::size_t>(i)] || col_done[static_cast<std::size_t>(j)]) continue;
      auto& s = rem_s[static_cast<std::size_t>(i)];
      auto& d = rem_d[static_cast<std::size_t>(j)];
      if (rows_left == 1 && cols_left == 1) {
        add_basic(i, j, std::max(s, 0.0));
        break;
      }
      const bool retire_row = cols_left == 1 || (rows_left > 1 && s <= d);
      if (retire_row) {
        add_basic(i, j, s);
        d = std::max(d - s, 0.0);
        s = 0.0;
        row_done[static_cast<std::size_t>(i)] = 1;
        --rows_left;
      } else {
        add_basic(i, j, d);
        s = std::max(s - d, 0.0);
        d = 0.0;
        col_done[static_cast<std::size_t>(j)] = 1;
        --cols_left;
      }
    }
    u_.assign(static_cast<std::size_t>(n_), 0.0);
    v_.assign(static_cast<std::size_t>(m_), 0.0);
  }

  void build_adjacency() {
    adjacency_.assign(static_cast<std::size_t>(n_ + m_), {});
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      adjacency_[static_cast<std::size_t>(basis_[k].i)].push_back(static_cast<int>(k));
      adjacency_[static_cast<std::size_t>(n_ + basis_[k].j)].push_back(static_cast<int>(k));
    }
  }

  // u_i + v_j = c_ij on every basic cell, rooted at u_0 = 0.
  void compute_potentials() {
    build_adjacency();
    std::vector<char> seen(static_cast<std::size_t>(n_ + m_), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    u_[0] = 0.0;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int k : adjacency_[static_cast<std::size_t>(node)]) {
        const auto& cell = basis_[static_cast<std::size_t>(k)];
        const double c = p_.cost_at(static_cast<std::size_t>(cell.i), static_cast<std::size_t>(cell.j));
        const int other = node < n_ ? n_ + cell.j : cell.i;
        if (seen[static_cast<std::size_t>(other)]) continue;
        seen[static_cast<std::size_t>(other)] = 1;
        if (other >= n_) {
          v_[static_cast<std::size_t>(cell.j)] = c - u_[static_cast<std::size_t>(cell.i)];
        } else {
          u_[static_cast<std::size_t>(cell.i)] = c - v_[static_cast<std::size_t>(cell.j)];
        }
        stack.push_back(other);
      }
    }
  }

  // Tree path from column node of `enter_j` to row node of `enter_i`, as
  // basis indices ordered from the column end.
  std::vector<int> tree_path(int enter_i, int enter_j) const {
    const int start = n_ + enter_j;
    const int goal = enter_i;
    std::vector<int> via(static_cast<std::size_t>(n_ + m_), -2);
    std::vector<int> queue{start};
    via[static_cast<std::size_t>(start)] = -1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int node = queue[head];
      if (node == goal) break;
      for (int k : adjacency_[static_cast<std::size_t>(node)]) {
        const auto& cell = basis_[static_cast<std::size_t>(k)];
        const int other = node < n_ ? n_ + cell.j : cell.i;
        if (via[static_cast<std::size_t>(other)] != -2) continue;
        via[static_cast<std::size_t>(other)] = k;
        queue.push_back(other);
      }
    }
    std::vector<int> path;
    for (int node = goal; node != start;) {
      const int k = via[static_cast<std::size_t>(node)];
      path.push_back(k);
      const auto& cell = basis_[static_cast<std::size_t>(k)];
      node = node < n_ ? n_ + cell.j : cell.i;
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  double pivot(int enter_i, int enter_j, bool bland) {
    const auto path = tree_path(enter_i, enter_j);
    // Cells at even positions (0, 2, ...) lose mass, odd ones gain.
    int leave = -1;
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t pos = 0; pos < path.size(); pos += 2) {
      const int k = path[pos];
      const auto& cell = basis_[static_cast<std::size_t>(k)];
      const bool better = cell.mass < theta ||
                          (cell.mass == theta && bland && leave >= 0 &&
                           cell.i * m_ + cell.j < basis_[static_cast<std::size_t>(leave)].i * m_ +
                                                      basis_[static_cast<std::size_t>(leave)].j);
      if (better) {
        theta = cell.mass;
        leave = k;
      }
    }
    theta = std::max(theta, 0.0);
    for (std::size_t pos = 0; pos < path.size(); ++pos) {
      auto& cell = basis_[static_cast<std::size_t>(path[pos])];
      cell.mass += pos % 2 == 0 ? -theta : theta;
    }
    auto& leaving = basis_[static_cast<std::size_t>(leave)];
    basic_index_[static_cast<std::size_t>(leaving.i) * m_ + leaving.j] = -1;
    leaving = {enter_i, enter_j, theta};
    basic_index_[static_cast<std::size_t>(enter_i) * m_ + enter_j] = leave;
    return theta;
  }

  const OTProblem& p_;
  int n_;
  int m_;
  std::vector<Cell> basis_;
  std::vector<int> basic_index_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<double> u_;
  std::vector<double> v_;
};

}  // namespace

TransportPlan solve_transport(const OTProblem& problem) {
  validate(problem);
  return TransportSimplex(problem).run();
}

double emd(const OTProblem& problem) { return solve_transport(problem).cost; }

}  // namespace matcher
