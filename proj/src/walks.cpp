#include "momentlab/walks.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "momentlab/linalg.hpp"

namespace momentlab::walks {

using lattice::BoundarySpec;
using lattice::Closure;
using lattice::LatticeDomain;
using lattice::LatticeModel;

namespace {

void require_compatible(const LatticeModel& model, const LatticeDomain& domain,
                        const BoundarySpec& boundary) {
  if (model.dimension() != domain.dimension())
    throw InvalidArgument("model and domain dimensions differ");
  if (static_cast<int>(boundary.axes.size()) != domain.dimension())
    throw InvalidArgument("boundary needs one closure per axis");
}

void require_site(const LatticeDomain& domain, int site) {
  if (site < 0 || site >= domain.size())
    throw InvalidArgument("root " + std::to_string(site) + " is not an occupied site");
}

double amplitude_sum(const LatticeModel& model) {
  double s = 0.0;
  for (const auto& h : model.hoppings()) s += std::abs(h.amplitude);
  return s;
}

// Depth-first enumeration of displacement sequences. Closure handling is written
// out here rather than shared with assembly so the two engines stay independent.
void enumerate(const LatticeModel& model, const LatticeDomain& domain, const BoundarySpec& boundary,
               const Coord& root, const Coord& at, Complex weight, int remaining, Complex& total) {
  if (remaining == 0) {
    if (at == root) total += weight;
    return;
  }
  for (const auto& hop : model.hoppings()) {
    Coord next = at;
    Complex w = weight * hop.amplitude;
    bool alive = true;
    for (int a = 0; a < domain.dimension() && alive; ++a) {
      const int L = domain.extent(a);
      int x = at[a] + hop.delta[a];
      if (x >= 0 && x < L) {
        next[a] = x;
        continue;
      }
      const Closure& cl = boundary.axes[a];
      if (cl.kind == Closure::Kind::Open) {
        alive = false;
        break;
      }
      if (cl.kind == Closure::Kind::Generalized) w *= cl.coupling;
      x %= L;
      if (x < 0) x += L;
      next[a] = x;
    }
    if (!alive || !domain.index_of(next)) continue;
    enumerate(model, domain, boundary, root, next, w, remaining - 1, total);
  }
}

}  // namespace

WalkGraph build_walk_graph(const LatticeModel& model, const LatticeDomain& domain,
                           const BoundarySpec& boundary) {
  require_compatible(model, domain, boundary);
  WalkGraph g;
  g.edges.resize(domain.size());
  for (int j = 0; j < domain.size(); ++j) {
    for (const auto& hop : model.hoppings()) {
      auto t = lattice::hop_target(domain, boundary, domain.site(j), hop.delta);
      if (!t) continue;
      g.edges[j].push_back({t->index, t->factor * hop.amplitude});
    }
  }
  return g;
}

Complex rooted_walk_sum(const WalkGraph& graph, int root, int m) {
  if (m < 1) throw InvalidArgument("walk length must be at least 1");
  if (root < 0 || root >= graph.size()) throw InvalidArgument("root is not an occupied site");
  const int n = graph.size();
  std::vector<Complex> v(n, Complex{}), next(n);
  v[root] = 1.0;
  for (int step = 0; step < m; ++step) {
    std::fill(next.begin(), next.end(), Complex{});
    for (int j = 0; j < n; ++j) {
      if (v[j] == Complex{}) continue;
      for (const auto& e : graph.edges[j]) next[e.target] += e.weight * v[j];
    }
    v.swap(next);
  }
  return v[root];
}

Complex rooted_walk_sum(const LatticeModel& model, const LatticeDomain& domain,
                        const BoundarySpec& boundary, int root, int m) {
  require_site(domain, root);
  return rooted_walk_sum(build_walk_graph(model, domain, boundary), root, m);
}

std::vector<Complex> rooted_walk_sums(const WalkGraph& graph, int m) {
  std::vector<Complex> out(graph.size());
  for (int i = 0; i < graph.size(); ++i) out[i] = rooted_walk_sum(graph, i, m);
  return out;
}

Complex rooted_walk_sum_exhaustive(const LatticeModel& model, const LatticeDomain& domain,
                                   const BoundarySpec& boundary, int root, int m) {
  require_compatible(model, domain, boundary);
  require_site(domain, root);
  if (domain.size() > kMaxExhaustiveSites)
    throw InvalidArgument("exhaustive walk enumeration is limited to N <= " +
                          std::to_string(kMaxExhaustiveSites));
  if (m < 1) throw InvalidArgument("walk length must be at least 1");
  Complex total{};
  const Coord start = domain.site(root);
  enumerate(model, domain, boundary, start, start, 1.0, m, total);
  return total;
}

Complex bulk_walk_weight(const LatticeModel& model, int m) {
  if (m < 1) throw InvalidArgument("walk length must be at least 1");
  const int half = ((m + 1) / 2) * std::max(model.max_range(), 1) + 1;
  std::vector<int> extents(model.dimension(), 2 * half + 1);
  auto patch = LatticeDomain::build(extents);
  Coord centre{};
  for (int a = 0; a < model.dimension(); ++a) centre[a] = half;
  auto root = patch.index_of(centre);
  return rooted_walk_sum(build_walk_graph(model, patch, BoundarySpec::open(model.dimension())), *root, m);
}

Complex missing_weight(const LatticeModel& model, const LatticeDomain& domain,
                       const BoundarySpec& boundary, int site, int m) {
  return bulk_walk_weight(model, m) - rooted_walk_sum(model, domain, boundary, site, m);
}

std::vector<int> boundary_hop_distance(const LatticeModel& model, const LatticeDomain& domain,
                                       const BoundarySpec& boundary, int max_depth) {
  require_compatible(model, domain, boundary);
  std::vector<Coord> steps;
  for (const auto& h : model.hoppings()) {
    Coord neg{};
    for (int a = 0; a < kMaxDimension; ++a) neg[a] = -h.delta[a];
    steps.push_back(h.delta);
    steps.push_back(neg);
  }
  // Only exact PBC removes a boundary; a GBC wrap carries weight g != 1.
  auto periodic = [&](int a) {
    const Closure& c = boundary.axes[a];
    return c.kind == Closure::Kind::Periodic ||
           (c.kind == Closure::Kind::Generalized && c.coupling == 1.0);
  };

  std::vector<int> dist(domain.size(), max_depth + 1);
  for (int i = 0; i < domain.size(); ++i) {
    std::set<Coord> seen{domain.site(i)};
    std::deque<std::pair<Coord, int>> queue{{domain.site(i), 0}};
    bool found = false;
    while (!queue.empty() && !found) {
      auto [c, d] = queue.front();
      queue.pop_front();
      if (d >= max_depth) continue;
      for (const auto& s : steps) {
        Coord n{};
        bool outside = false;
        for (int a = 0; a < domain.dimension(); ++a) {
          int x = c[a] + s[a];
          const int L = domain.extent(a);
          if (x < 0 || x >= L) {
            if (!periodic(a)) {
              outside = true;
              break;
            }
            x %= L;
            if (x < 0) x += L;
          }
          n[a] = x;
        }
        if (outside || !domain.index_of(n)) {
          dist[i] = d + 1;
          found = true;
          break;
        }
        if (seen.insert(n).second) queue.emplace_back(n, d + 1);
      }
    }
  }
  return dist;
}

WalkLedger walk_ledger(const LatticeModel& model, const LatticeDomain& domain,
                       const BoundarySpec& boundary, int m) {
  WalkLedger ledger;
  ledger.order = m;
  ledger.bulk = bulk_walk_weight(model, m);
  ledger.rooted = rooted_walk_sums(build_walk_graph(model, domain, boundary), m);
  ledger.missing.resize(ledger.rooted.size());
  for (std::size_t i = 0; i < ledger.rooted.size(); ++i) ledger.missing[i] = ledger.bulk - ledger.rooted[i];
  ledger.boundary_distance = boundary_hop_distance(model, domain, boundary, m / 2);
  ledger.in_shell.resize(ledger.rooted.size());
  for (std::size_t i = 0; i < ledger.rooted.size(); ++i)
    ledger.in_shell[i] = ledger.boundary_distance[i] <= m / 2;
  return ledger;
}

DecompositionReport decomposition_check(const LatticeModel& model, const LatticeDomain& domain,
                                        const BoundarySpec& boundary, int m, double tolerance) {
  if (m < 1 || m > kMaxDecompositionOrder)
    throw InvalidArgument("decomposition check supports 1 <= m <= " +
                          std::to_string(kMaxDecompositionOrder));
  if (domain.size() > kMaxDecompositionSites)
    throw InvalidArgument("decomposition check supports N <= " +
                          std::to_string(kMaxDecompositionSites));

  DecompositionReport r;
  r.order = m;
  r.predicted_shell = m / 2;

  auto h = lattice::assemble(model, domain, boundary);
  const double n = static_cast<double>(domain.size());
  r.trace_moment = linalg::shifted_power_trace(h.matrix, model.onsite(), m) / n;

  auto ledger = walk_ledger(model, domain, boundary, m);
  Complex missing_sum{};
  for (const auto& d : ledger.missing) missing_sum += d;
  r.ledger_moment = ledger.bulk - missing_sum / n;

  const double scale = std::pow(amplitude_sum(model), m);
  const double denom = std::max({std::abs(r.trace_moment), std::abs(ledger.bulk), 1e-3 * scale});
  r.relative_error = denom > 0 ? std::abs(r.trace_moment - r.ledger_moment) / denom : 0.0;
  r.identity_holds = r.relative_error <= tolerance;

  r.observed_shell = -1;
  bool bound = true;
  for (std::size_t i = 0; i < ledger.missing.size(); ++i) {
    if (std::abs(ledger.missing[i]) <= 1e-10 * scale) continue;
    r.observed_shell = std::max(r.observed_shell, ledger.boundary_distance[i]);
    if (ledger.boundary_distance[i] > r.predicted_shell) bound = false;
  }
  r.shell_bound_holds = bound;
  return r;
}

}  // namespace momentlab::walks
