#pragma once

#include <span>
#include <vector>

namespace matcher {

/// Balanced transport problem: supply and demand weights each sum to 1 and
/// cost is row-major supply x demand.
struct OTProblem {
  std::vector<double> supply;
  std::vector<double> demand;
  std::vector<double> cost;

  double cost_at(std::size_t i, std::size_t j) const { return cost[i * demand.size() + j]; }
};

struct TransportFlow {
  int from = 0;
  int to = 0;
  double mass = 0.0;
};

struct TransportPlan {
  double cost = 0.0;
  /// Basic cells of the optimal vertex; zero-mass cells may appear.
  std::vector<TransportFlow> flows;
  int pivots = 0;
};

inline constexpr double kWeightTolerance = 1e-9;

/// Exact optimum of the transport LP via the transportation simplex (network
/// simplex on the bipartite graph). Throws InfeasibleWeights when weights are
/// negative or do not sum to 1.
TransportPlan solve_transport(const OTProblem& problem);

/// Earth mover's distance: the optimal transport cost.
double emd(const OTProblem& problem);

}  // namespace matcher
