#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <utility>
#include <vector>

#include "gradsolve/linalg.hpp"
#include "gradsolve/problems.hpp"
#include "gradsolve/solver.hpp"
#include "gradsolve/steplength.hpp"

namespace gradsolve {

/// Contiguous row blocks, one per simulated processor. Ranges are 0-based and
/// half-open.
struct PartitionPlan {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;

  std::size_t processors() const noexcept { return ranges.size(); }
};

/// Near-equal blocks (sizes differ by at most one, larger blocks first).
PartitionPlan partition_rows(std::size_t n, std::size_t p);

enum class Strategy {
  GA,  ///< gather q = A g, then one global dot
  RA,  ///< local partial dots, then a scalar sum-reduce
};

enum class ReduceOrder {
  Ascending,  ///< ((c_1 + c_2) + c_3) + ...
  Tree,       ///< pairwise, neighbouring blocks first
};

std::string_view to_string(Strategy s) noexcept;

/// Communication and precision data for one iteration (or one standalone
/// steplength evaluation). Volumes count real values crossing the simulated
/// interconnect, summed over processors.
struct CommRecord {
  std::size_t k = 0;
  Strategy strategy = Strategy::GA;
  std::uint64_t scalars_sent = 0;   ///< steplength traffic
  std::uint64_t gather_volume = 0;  ///< gradient all-gather traffic
  double alpha = 0.0;
  /// Largest |q_strategy - q_seq| / |q_seq| over the Rayleigh quotients q
  /// evaluated this iteration; zero for iterations that evaluate none.
  double alpha_divergence = 0.0;
};

struct CommTrace {
  std::vector<CommRecord> records;

  std::uint64_t total_scalars() const noexcept;
  std::uint64_t total_gather() const noexcept;
  double max_divergence() const noexcept;
};

/// SD steplength via the gather strategy. Bit-identical to the sequential
/// quotient; traffic is (p - 1) n scalars.
std::pair<double, CommRecord> ga_steplength(const PartitionPlan& plan, const SpdOperator& a,
                                            const Vector& g);

/// SD steplength via the reduce strategy. Traffic is p - 1 scalars; the
/// partial sums are combined in `order`.
std::pair<double, CommRecord> ra_steplength(const PartitionPlan& plan, const SpdOperator& a,
                                            const Vector& g,
                                            ReduceOrder order = ReduceOrder::Ascending);

/// Rayleigh kernel that evaluates every quotient through one strategy and
/// meters the traffic. Matrix powers beyond the first are applied block-wise
/// with a full gather after each product.
class StrategyKernel final : public RayleighKernel {
public:
  StrategyKernel(PartitionPlan plan, Strategy strategy,
                 ReduceOrder order = ReduceOrder::Ascending);

  double rayleigh(const SpdOperator& a, const Vector& g, int rho) override;

  /// Returns the traffic and divergence accumulated since the last call.
  CommRecord take(std::size_t k, double alpha);

private:
  PartitionPlan plan_;
  Strategy strategy_;
  ReduceOrder order_;
  std::uint64_t scalars_ = 0;
  double divergence_ = 0.0;
};

struct SimulationResult {
  ConvergenceHistory history;
  CommTrace trace;
};

/// Full gradient solve with every steplength quotient evaluated through
/// `strategy`. Each iteration also pays the gradient all-gather,
/// (p - 1) n scalars, under either strategy.
SimulationResult simulate_parallel_solve(const ProblemInstance& problem, const SteplengthRule& rule,
                                         const PartitionPlan& plan, Strategy strategy,
                                         SolveConfig config,
                                         ReduceOrder order = ReduceOrder::Ascending);

/// CSV with columns k,strategy,scalars_sent,gather_volume,alpha,divergence.
void write_comm_trace_csv(std::ostream& out, const CommTrace& trace);

}  // namespace gradsolve
