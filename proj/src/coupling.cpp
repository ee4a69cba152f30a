// SPDX-License-Identifier: MIT
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dyadic_internal.hpp"
#include "wrate/dyadic.hpp"

namespace wrate {

namespace {

double dist_p(std::span<const double> x, std::span<const double> y, double p) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    return std::pow(std::sqrt(s), p);
}

}  // namespace

double plan_cost(const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
    double c = 0.0;
    for (const auto& e : plan.entries) c += e.mass * dist_p(mu.point(e.source), nu.point(e.target), p);
    return c;
}

double plan_marginal_error(const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    std::vector<double> row(mu.size(), 0.0), col(nu.size(), 0.0);
    for (const auto& e : plan.entries) {
        if (e.source >= mu.size() || e.target >= nu.size()) throw std::out_of_range("plan index out of range");
        row[e.source] += e.mass;
        col[e.target] += e.mass;
    }
    double err = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) err = std::max(err, std::fabs(row[i] - mu.weight(i)));
    for (std::size_t j = 0; j < col.size(); ++j) err = std::max(err, std::fabs(col[j] - nu.weight(j)));
    return err;
}

namespace dyadic {

namespace {

struct Open {
    std::uint32_t atom;
    double mass;
};

struct Leftover {
    std::vector<Open> mu, nu;
};

class GreedyMatcher {
public:
    GreedyMatcher(const std::vector<detail::Item>& items, std::vector<double> mu_w, std::vector<double> nu_w,
                  std::size_t depth, std::size_t dim, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                  std::vector<PlanEntry>& out)
        : items_(items), mu_w_(std::move(mu_w)), nu_w_(std::move(nu_w)), depth_(depth), dim_(dim), mu_(mu),
          nu_(nu), out_(out) {}

    void run() { solve(0, items_.size(), 0); }

private:
    // Items [lo, hi) share their level-`level` cell.
    Leftover solve(std::size_t lo, std::size_t hi, std::size_t level) {
        Leftover left;
        if (level == depth_ || single_location(lo, hi)) {
            for (std::size_t i = lo; i < hi; ++i) push(left, items_[i]);
            match(left);
            return left;
        }
        const int shift = static_cast<int>(dim_ * (depth_ - level - 1));
        std::size_t i = lo;
        while (i < hi) {
            const std::uint64_t prefix = items_[i].code >> shift;
            std::size_t j = i;
            while (j < hi && (items_[j].code >> shift) == prefix) ++j;
            Leftover child = solve(i, j, level + 1);
            left.mu.insert(left.mu.end(), child.mu.begin(), child.mu.end());
            left.nu.insert(left.nu.end(), child.nu.begin(), child.nu.end());
            i = j;
        }
        match(left);
        return left;
    }

    bool single_location(std::size_t lo, std::size_t hi) const {
        for (std::size_t i = lo + 1; i < hi; ++i)
            if (!detail::same_location(items_[lo], items_[i], mu_, &nu_)) return false;
        return true;
    }

    void push(Leftover& l, const detail::Item& it) {
        if (it.from_mu) {
            if (mu_w_[it.atom] > 0.0) l.mu.push_back({it.atom, mu_w_[it.atom]});
        } else if (nu_w_[it.atom] > 0.0) {
            l.nu.push_back({it.atom, nu_w_[it.atom]});
        }
    }

    // North-west corner rule over the open lists; survivors stay in `l`.
    void match(Leftover& l) {
        std::size_t i = 0, j = 0;
        while (i < l.mu.size() && j < l.nu.size()) {
            Open& a = l.mu[i];
            Open& b = l.nu[j];
            const double tol = 1e-14 * std::max(a.mass, b.mass);
            if (std::fabs(a.mass - b.mass) <= tol) {
                out_.push_back({a.atom, b.atom, 0.5 * (a.mass + b.mass)});
                ++i;
                ++j;
            } else if (a.mass < b.mass) {
                out_.push_back({a.atom, b.atom, a.mass});
                b.mass -= a.mass;
                ++i;
            } else {
                out_.push_back({a.atom, b.atom, b.mass});
                a.mass -= b.mass;
                ++j;
            }
        }
        l.mu.erase(l.mu.begin(), l.mu.begin() + static_cast<std::ptrdiff_t>(i));
        l.nu.erase(l.nu.begin(), l.nu.begin() + static_cast<std::ptrdiff_t>(j));
    }

    const std::vector<detail::Item>& items_;
    std::vector<double> mu_w_, nu_w_;
    std::size_t depth_, dim_;
    const DiscreteMeasure& mu_;
    const DiscreteMeasure& nu_;
    std::vector<PlanEntry>& out_;
};

}  // namespace

TransportPlan build_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, std::size_t depth) {
    if (mu.dim() != nu.dim()) throw std::invalid_argument("measures differ in dimension");
    if (!(p > 0.0)) throw std::invalid_argument("p must be positive");
    if (depth < 1 || depth > max_depth(mu.dim())) throw std::invalid_argument("depth out of range");
    // Every atom is tallied in its own shell.
    const auto si = detail::collect_shells(mu, &nu, depth, std::nullopt);
    const std::size_t shells = si.items.size();

    std::vector<int> mu_shell(mu.size()), nu_shell(nu.size());
    for (std::size_t n = 0; n < shells; ++n)
        for (const auto& it : si.items[n]) (it.from_mu ? mu_shell : nu_shell)[it.atom] = static_cast<int>(n);

    TransportPlan plan;
    plan.p = p;
    std::vector<double> mu_w(mu.size(), 0.0), nu_w(nu.size(), 0.0);
    for (std::size_t n = 0; n < shells; ++n) {
        const double a = si.mu_mass[n], b = si.nu_mass[n];
        const double m = std::min(a, b);
        if (m <= 0.0) continue;
        std::fill(mu_w.begin(), mu_w.end(), 0.0);
        std::fill(nu_w.begin(), nu_w.end(), 0.0);
        for (const auto& it : si.items[n]) {
            if (it.from_mu) {
                mu_w[it.atom] = mu.weight(it.atom) * m / a;
            } else {
                nu_w[it.atom] = nu.weight(it.atom) * m / b;
            }
        }
        GreedyMatcher(si.items[n], mu_w, nu_w, depth, mu.dim(), mu, nu, plan.entries).run();
    }

    // Excess mass of each shell, coupled by the normalized product.
    std::vector<std::pair<std::size_t, double>> alpha, beta;
    double q = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const auto n = static_cast<std::size_t>(mu_shell[i]);
        const double a = si.mu_mass[n], b = si.nu_mass[n];
        if (a > b) {
            alpha.emplace_back(i, mu.weight(i) * (a - b) / a);
            q += alpha.back().second;
        }
    }
    for (std::size_t j = 0; j < nu.size(); ++j) {
        const auto n = static_cast<std::size_t>(nu_shell[j]);
        const double a = si.mu_mass[n], b = si.nu_mass[n];
        if (b > a) beta.emplace_back(j, nu.weight(j) * (b - a) / b);
    }
    if (q > 0.0)
        for (const auto& [i, wa] : alpha)
            for (const auto& [j, wb] : beta) plan.entries.push_back({i, j, wa * wb / q});

    std::sort(plan.entries.begin(), plan.entries.end(), [](const PlanEntry& x, const PlanEntry& y) {
        return x.source != y.source ? x.source < y.source : x.target < y.target;
    });
    std::vector<PlanEntry> merged;
    for (const auto& e : plan.entries) {
        if (!merged.empty() && merged.back().source == e.source && merged.back().target == e.target) {
            merged.back().mass += e.mass;
        } else {
            merged.push_back(e);
        }
    }
    plan.entries = std::move(merged);
    plan.cost_p = plan_cost(plan, mu, nu, p);
    return plan;
}

}  // namespace dyadic
}  // namespace wrate
