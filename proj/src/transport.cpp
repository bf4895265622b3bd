#include "mobeq/transport.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace mobeq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

class Augmenter {
 public:
  explicit Augmenter(const TransportProblem& p)
      : p_(p),
        n_src_(p.n_sources()),
        n_sink_(p.n_sinks()),
        flow_(n_src_ * n_sink_, 0.0),
        used_(n_sink_, 0.0),
        dist_(n_src_ + n_sink_),
        pred_(n_src_ + n_sink_) {
    double cmax = 0.0;
    for (double c : p.unit_cost) cmax = std::max(cmax, c);
    tol_ = 1e-12 * std::max(1.0, cmax);
  }

  TransportSolution run() {
    // Each augmentation zeroes a supply, a sink residual or a reverse arc,
    // so the count is bounded; the cap only guards against a logic error.
    const std::size_t cap = 64 * (n_src_ + n_sink_) * (n_src_ + n_sink_) + 64;
    std::size_t augmentations = 0;
    for (std::size_t s = 0; s < n_src_; ++s) {
      double remaining = p_.supply[s];
      while (remaining > 0.0) {
        if (++augmentations > cap) {
          throw std::runtime_error("transport solver exceeded its augmentation bound");
        }
        shortest_paths(s);
        const std::size_t sink = cheapest_open_sink();
        remaining = augment(s, sink, remaining);
      }
    }
    TransportSolution sol;
    sol.augmentations = augmentations;
    for (std::size_t s = 0; s < n_src_; ++s) {
      for (std::size_t m = 0; m < n_sink_; ++m) {
        sol.objective += p_.cost(s, m) * flow_[s * n_sink_ + m];
      }
    }
    sol.flow = std::move(flow_);
    return sol;
  }

 private:
  std::size_t sink_node(std::size_t m) const { return n_src_ + m; }

  double residual(std::size_t m) const {
    const Capacity& c = p_.sink_capacity[m];
    return c.is_unbounded() ? kInf : c.value() - used_[m];
  }

  void shortest_paths(std::size_t origin) {
    std::fill(dist_.begin(), dist_.end(), kInf);
    std::fill(pred_.begin(), pred_.end(), kNone);
    dist_[origin] = 0.0;
    const std::size_t n_nodes = n_src_ + n_sink_;
    for (std::size_t pass = 0; pass < n_nodes; ++pass) {
      bool changed = false;
      for (std::size_t s = 0; s < n_src_; ++s) {
        if (dist_[s] == kInf) continue;
        for (std::size_t m = 0; m < n_sink_; ++m) {
          const double nd = dist_[s] + p_.cost(s, m);
          if (nd < dist_[sink_node(m)] - tol_) {
            dist_[sink_node(m)] = nd;
            pred_[sink_node(m)] = s;
            changed = true;
          }
        }
      }
      for (std::size_t m = 0; m < n_sink_; ++m) {
        const double dm = dist_[sink_node(m)];
        if (dm == kInf) continue;
        for (std::size_t s = 0; s < n_src_; ++s) {
          if (flow_[s * n_sink_ + m] <= 0.0) continue;
          const double nd = dm - p_.cost(s, m);
          if (nd < dist_[s] - tol_) {
            dist_[s] = nd;
            pred_[s] = sink_node(m);
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
  }

  std::size_t cheapest_open_sink() const {
    std::size_t best = kNone;
    for (std::size_t m = 0; m < n_sink_; ++m) {
      const double dm = dist_[sink_node(m)];
      if (dm == kInf || !(residual(m) > 0.0)) continue;
      if (best == kNone || dm < dist_[sink_node(best)] - tol_) best = m;
    }
    if (best == kNone) throw std::logic_error("transport problem has no open sink");
    return best;
  }

  // Pushes flow along the predecessor chain ending at `sink`; returns the
  // supply still left at `origin`.
  double augment(std::size_t origin, std::size_t sink, double remaining) {
    double amount = std::min(remaining, residual(sink));
    const std::size_t guard = n_src_ + n_sink_ + 1;
    std::size_t steps = 0;
    for (std::size_t v = sink_node(sink); v != origin;) {
      const std::size_t u = pred_[v];
      if (u == kNone || ++steps > guard) throw std::logic_error("broken augmenting path");
      if (u >= n_src_) {  // reverse arc sink u -> source v
        amount = std::min(amount, flow_[v * n_sink_ + (u - n_src_)]);
      }
      v = u;
    }

    for (std::size_t v = sink_node(sink); v != origin;) {
      const std::size_t u = pred_[v];
      if (u < n_src_) {
        flow_[u * n_sink_ + (v - n_src_)] += amount;
      } else {
        double& f = flow_[v * n_sink_ + (u - n_src_)];
        f = (f == amount) ? 0.0 : f - amount;
      }
      v = u;
    }

    const Capacity& cap = p_.sink_capacity[sink];
    if (!cap.is_unbounded()) {
      used_[sink] = (amount == residual(sink)) ? cap.value() : used_[sink] + amount;
    }
    return amount == remaining ? 0.0 : remaining - amount;
  }

  const TransportProblem& p_;
  std::size_t n_src_;
  std::size_t n_sink_;
  std::vector<double> flow_;
  std::vector<double> used_;
  std::vector<double> dist_;
  std::vector<std::size_t> pred_;
  double tol_ = 0.0;
};

}  // namespace

TransportSolution solve_transport(const TransportProblem& problem) {
  if (problem.unit_cost.size() != problem.n_sources() * problem.n_sinks()) {
    throw std::invalid_argument("cost matrix does not match sources x sinks");
  }
  if (problem.n_sinks() == 0 || !problem.sink_capacity[0].is_unbounded()) {
    throw std::invalid_argument("sink 0 must be unbounded");
  }
  return Augmenter(problem).run();
}

}  // namespace mobeq
