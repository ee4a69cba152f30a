// SPDX-License-Identifier: MIT
//
// Spanning-tree network simplex in the style of LEMON's implementation:
// artificial root, block-search pricing, strongly feasible leaving-arc rule.
// The tree is kept as parent/pred/children arrays; after each pivot the
// re-hung subtree gets depth and potentials recomputed from its new parent.
#include "network_simplex.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wrate::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Simplex {
public:
    Simplex(const std::vector<double>& supply, const std::vector<double>& demand, const std::vector<double>& cost)
        : n_(supply.size()), m_(demand.size()), nodes_(n_ + m_ + 1), root_(n_ + m_), cost_(cost) {
        double maxc = 0.0;
        for (double c : cost_) maxc = std::max(maxc, c);
        art_cost_ = (maxc + 1.0) * static_cast<double>(nodes_);
        eps_ = 8.0 * DBL_EPSILON * art_cost_;
        real_arcs_ = n_ * m_;
        block_ = std::max<std::size_t>(16, static_cast<std::size_t>(std::sqrt(static_cast<double>(real_arcs_))));

        parent_.assign(nodes_, root_);
        pred_.assign(nodes_, 0);
        flow_.assign(nodes_, 0.0);
        depth_.assign(nodes_, 1);
        pi_.assign(nodes_, 0.0);
        children_.assign(nodes_, {});
        pos_.assign(nodes_, 0);
        parent_[root_] = root_;
        depth_[root_] = 0;
        for (std::size_t v = 0; v < root_; ++v) {
            pred_[v] = real_arcs_ + v;
            if (v < n_) {
                flow_[v] = supply[v];
                pi_[v] = -art_cost_;  // arc v -> root
            } else {
                flow_[v] = demand[v - n_];
                pi_[v] = art_cost_;  // arc root -> v
            }
            pos_[v] = children_[root_].size();
            children_[root_].push_back(v);
        }
    }

    TransportSolution run() {
        TransportSolution sol;
        std::size_t e = 0;
        while (find_entering(e)) {
            pivot(e);
            ++sol.pivots;
        }
        sol.flow.assign(real_arcs_, 0.0);
        for (std::size_t v = 0; v < root_; ++v) {
            const std::size_t a = pred_[v];
            if (a < real_arcs_ && flow_[v] > 0.0) {
                sol.flow[a] = flow_[v];
                sol.cost += flow_[v] * cost_[a];
            }
        }
        return sol;
    }

private:
    std::size_t tail(std::size_t a) const {
        if (a < real_arcs_) return a / m_;
        const std::size_t v = a - real_arcs_;
        return v < n_ ? v : root_;
    }
    double arc_cost(std::size_t a) const { return a < real_arcs_ ? cost_[a] : art_cost_; }
    bool up(std::size_t v) const { return tail(pred_[v]) == v; }

    double reduced(std::size_t a) const { return cost_[a] + pi_[a / m_] - pi_[n_ + a % m_]; }

    bool find_entering(std::size_t& entering) {
        std::size_t cnt = 0;
        double best = -eps_;
        bool found = false;
        for (std::size_t k = 0; k < real_arcs_; ++k) {
            const std::size_t a = next_;
            next_ = next_ + 1 == real_arcs_ ? 0 : next_ + 1;
            const double rc = reduced(a);
            if (rc < best) {
                best = rc;
                entering = a;
                found = true;
            }
            if (++cnt == block_) {
                if (found) return true;
                cnt = 0;
            }
        }
        return found;
    }

    void detach(std::size_t v) {
        auto& sib = children_[parent_[v]];
        const std::size_t p = pos_[v];
        sib[p] = sib.back();
        pos_[sib[p]] = p;
        sib.pop_back();
    }
    void attach(std::size_t v, std::size_t par) {
        parent_[v] = par;
        pos_[v] = children_[par].size();
        children_[par].push_back(v);
    }

    void pivot(std::size_t e) {
        const std::size_t u = e / m_, v = n_ + e % m_;
        // Join node.
        std::size_t a = u, b = v;
        while (a != b) {
            if (depth_[a] >= depth_[b]) {
                a = parent_[a];
            } else {
                b = parent_[b];
            }
        }
        const std::size_t join = a;

        double delta = kInf;
        std::size_t out = 0;
        int side = 0;
        for (std::size_t x = u; x != join; x = parent_[x]) {
            const double c = up(x) ? flow_[x] : kInf;
            if (c < delta) {
                delta = c;
                out = x;
                side = 1;
            }
        }
        for (std::size_t x = v; x != join; x = parent_[x]) {
            const double c = up(x) ? kInf : flow_[x];
            if (c <= delta) {
                delta = c;
                out = x;
                side = 2;
            }
        }
        if (side == 0) throw std::logic_error("network simplex: unbounded cycle");

        if (delta > 0.0) {
            for (std::size_t x = u; x != join; x = parent_[x]) flow_[x] += up(x) ? -delta : delta;
            for (std::size_t x = v; x != join; x = parent_[x]) flow_[x] += up(x) ? delta : -delta;
        }

        // Re-hang the subtree below `out` from the entering arc.
        const std::size_t q = side == 1 ? u : v;
        const std::size_t newpar = side == 1 ? v : u;
        std::size_t x = q;
        std::size_t carried_pred = e;
        double carried_flow = delta;
        std::size_t next_par = newpar;
        while (true) {
            const std::size_t old_par = parent_[x];
            const std::size_t old_pred = pred_[x];
            const double old_flow = flow_[x];
            detach(x);
            attach(x, next_par);
            pred_[x] = carried_pred;
            flow_[x] = std::max(0.0, carried_flow);
            if (x == out) break;
            carried_pred = old_pred;
            carried_flow = old_flow;
            next_par = x;
            x = old_par;
        }
        refresh(q);
    }

    void refresh(std::size_t top) {
        stack_.clear();
        stack_.push_back(top);
        while (!stack_.empty()) {
            const std::size_t x = stack_.back();
            stack_.pop_back();
            const std::size_t par = parent_[x];
            depth_[x] = depth_[par] + 1;
            const double c = arc_cost(pred_[x]);
            pi_[x] = up(x) ? pi_[par] - c : pi_[par] + c;
            for (std::size_t ch : children_[x]) stack_.push_back(ch);
        }
    }

    std::size_t n_, m_, nodes_, root_;
    const std::vector<double>& cost_;
    std::size_t real_arcs_ = 0;
    std::size_t block_ = 0;
    std::size_t next_ = 0;
    double art_cost_ = 0.0;
    double eps_ = 0.0;

    std::vector<std::size_t> parent_, pred_;
    std::vector<double> flow_;
    std::vector<std::size_t> depth_;
    std::vector<double> pi_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> pos_;
    std::vector<std::size_t> stack_;
};

}  // namespace

TransportSolution solve_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                                  const std::vector<double>& cost) {
    if (supply.empty() || demand.empty()) throw std::invalid_argument("empty transport problem");
    if (cost.size() != supply.size() * demand.size()) throw std::invalid_argument("cost matrix size mismatch");
    return Simplex(supply, demand, cost).run();
}

}  // namespace wrate::detail
