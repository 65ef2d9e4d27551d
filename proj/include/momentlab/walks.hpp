#pragma once

#include <vector>

#include "momentlab/lattice.hpp"

namespace momentlab::walks {

/// Weighted, directed hop graph of a model restricted to a domain under a
/// boundary closure. edges[j] lists (i, weight) for every hop j -> i.
struct WalkGraph {
  struct Edge {
    int target = 0;
    Complex weight{};
  };
  std::vector<std::vector<Edge>> edges;

  int size() const { return static_cast<int>(edges.size()); }
};

WalkGraph build_walk_graph(const lattice::LatticeModel& model, const lattice::LatticeDomain& domain,
                           const lattice::BoundarySpec& boundary);

/// Weighted sum of all length-m closed walks rooted at `root` (on-site excluded),
/// by m-step vector propagation.
Complex rooted_walk_sum(const WalkGraph& graph, int root, int m);
Complex rooted_walk_sum(const lattice::LatticeModel& model, const lattice::LatticeDomain& domain,
                        const lattice::BoundarySpec& boundary, int root, int m);

/// Rooted sums for every site in index order.
std::vector<Complex> rooted_walk_sums(const WalkGraph& graph, int m);

/// Exhaustive enumeration over displacement sequences; an independent engine
/// for tiny instances (N <= kMaxExhaustiveSites).
inline constexpr int kMaxExhaustiveSites = 8;
Complex rooted_walk_sum_exhaustive(const lattice::LatticeModel& model,
                                   const lattice::LatticeDomain& domain,
                                   const lattice::BoundarySpec& boundary, int root, int m);

/// Fully sampled rooted sum w_m, evaluated at the centre of an open patch of
/// half-width ceil(m/2) * R + 1.
Complex bulk_walk_weight(const lattice::LatticeModel& model, int m);

Complex missing_weight(const lattice::LatticeModel& model, const lattice::LatticeDomain& domain,
                       const lattice::BoundarySpec& boundary, int site, int m);

/// Hop distance (graph distance on the undirected displacement set) from each
/// site to the nearest site outside the domain: out of the box across a
/// non-periodic axis, or masked. Distances larger than `max_depth` are reported
/// as max_depth + 1.
std::vector<int> boundary_hop_distance(const lattice::LatticeModel& model,
                                       const lattice::LatticeDomain& domain,
                                       const lattice::BoundarySpec& boundary, int max_depth);

struct WalkLedger {
  int order = 0;
  Complex bulk{};
  std::vector<Complex> rooted;
  std::vector<Complex> missing;
  std::vector<int> boundary_distance;
  std::vector<bool> in_shell;  // distance <= floor(m/2)
};

WalkLedger walk_ledger(const lattice::LatticeModel& model, const lattice::LatticeDomain& domain,
                       const lattice::BoundarySpec& boundary, int m);

struct DecompositionReport {
  int order = 0;
  Complex trace_moment{};   // (1/N) Tr[(H - w0)^m]
  Complex ledger_moment{};  // w_m - (1/N) sum_i delta_m(i)
  double relative_error = 0.0;
  bool identity_holds = false;
  int observed_shell = -1;  // max boundary distance among sites with delta != 0 (-1: none)
  int predicted_shell = 0;  // floor(m/2)
  bool shell_bound_holds = false;
};

inline constexpr int kMaxDecompositionOrder = 8;
inline constexpr int kMaxDecompositionSites = 200;

DecompositionReport decomposition_check(const lattice::LatticeModel& model,
                                        const lattice::LatticeDomain& domain,
                                        const lattice::BoundarySpec& boundary, int m,
                                        double tolerance = 1e-10);

}  // namespace momentlab::walks
