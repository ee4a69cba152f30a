// SPDX-License-Identifier: MIT
#include "wrate/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dyadic_internal.hpp"

namespace wrate::dyadic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_p(double p) {
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("p must be positive and finite");
}

void check_depth(std::size_t depth, std::size_t dim) {
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    if (depth > max_depth(dim))
        throw std::invalid_argument("depth exceeds the representable maximum for this dimension");
}

int axis_shell(double v) {
    if (v > -1.0 && v <= 1.0) return 0;
    int e = 0;
    const double m = std::frexp(std::fabs(v), &e);
    if (v > 0.0) return m == 0.5 ? e - 1 : e;  // smallest n with v <= 2^n
    return e;                                  // smallest n with |v| < 2^n
}

std::uint64_t interleave(std::span<const std::uint64_t> idx, std::size_t level) {
    const std::size_t d = idx.size();
    std::uint64_t code = 0;
    for (std::size_t b = level; b-- > 0;)
        for (std::size_t k = 0; k < d; ++k) code = (code << 1) | ((idx[k] >> b) & 1u);
    return code;
}

double pow2(double e) { return std::exp2(e); }

struct CellBox {
    std::vector<double> lo, hi;
};

// Box (lo, hi] in original coordinates of a level-`level` cell of shell n.
CellBox cell_box(std::uint64_t code, std::size_t level, std::size_t dim, int n) {
    const auto idx = decode_cell(code, level, dim);
    const double side = std::ldexp(1.0, 1 - static_cast<int>(level));
    CellBox b{std::vector<double>(dim), std::vector<double>(dim)};
    for (std::size_t k = 0; k < dim; ++k) {
        b.lo[k] = std::ldexp(-1.0 + static_cast<double>(idx[k]) * side, n);
        b.hi[k] = std::ldexp(-1.0 + static_cast<double>(idx[k] + 1) * side, n);
    }
    return b;
}

double cube_mass(const ReferenceMeasure& nu, int n) {
    const std::vector<double> lo(nu.dim(), -std::ldexp(1.0, n)), hi(nu.dim(), std::ldexp(1.0, n));
    return nu.box_mass(lo, hi);
}

// nu outside (-2^n, 2^n]^d for product laws, from the marginal tails so that
// far shells do not cancel against a mass close to 1.
double outside_cube_mass(const ReferenceMeasure& nu, int n) {
    const double r = std::ldexp(1.0, n);
    double log_inside = 0.0;
    for (const auto& law : nu.marginals())
        log_inside += std::log1p(-(law.interval_mass(-kInf, -r) + law.interval_mass(r, kInf)));
    return -std::expm1(log_inside);
}

double shell_mass(const ReferenceMeasure& nu, int n) {
    if (n == 0) return cube_mass(nu, 0);
    if (!nu.marginals().empty()) return std::max(0.0, outside_cube_mass(nu, n - 1) - outside_cube_mass(nu, n));
    return std::max(0.0, cube_mass(nu, n) - cube_mass(nu, n - 1));
}

// nu(cell \ inner cube of shell n).
double cell_mass(const ReferenceMeasure& nu, const CellBox& b, int n) {
    if (n == 0) return nu.box_mass(b.lo, b.hi);
    const double r = std::ldexp(1.0, n - 1);
    const auto& laws = nu.marginals();
    if (laws.empty()) {
        const double m = nu.box_mass(b.lo, b.hi);
        if (m == 0.0) return m;
        std::vector<double> lo(b.lo.size()), hi(b.hi.size());
        for (std::size_t k = 0; k < lo.size(); ++k) {
            lo[k] = std::max(b.lo[k], -r);
            hi[k] = std::min(b.hi[k], r);
            if (!(lo[k] < hi[k])) return m;
        }
        return std::max(0.0, m - nu.box_mass(lo, hi));
    }
    // prod a_k - prod c_k = sum_k (prod_{j<k} c_j)(a_k - c_k)(prod_{j>k} a_j), with
    // a_k the axis mass of the cell, c_k its part inside (-r, r]; every term is
    // computed without subtraction.
    const std::size_t d = laws.size();
    std::vector<double> a(d), c(d), out(d);
    for (std::size_t k = 0; k < d; ++k) {
        const double lo = b.lo[k], hi = b.hi[k];
        a[k] = laws[k].interval_mass(lo, hi);
        c[k] = laws[k].interval_mass(std::max(lo, -r), std::min(hi, r));
        out[k] = (lo < -r ? laws[k].interval_mass(lo, std::min(hi, -r)) : 0.0) +
                 (hi > r ? laws[k].interval_mass(std::max(lo, r), hi) : 0.0);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        double t = out[k];
        for (std::size_t j = 0; j < k; ++j) t *= c[j];
        for (std::size_t j = k + 1; j < d; ++j) t *= a[j];
        total += t;
    }
    return total;
}

// Mass outside (-2^K, 2^K]^d by a union bound over coordinates, for product laws.
double outside_cube_bound(const ReferenceMeasure& nu, int K) {
    const double r = std::ldexp(1.0, K);
    double t = 0.0;
    for (const auto& law : nu.marginals())
        t += law.interval_mass(-kInf, -r) + law.interval_mass(r, kInf);
    return t;
}

// Bound on sum_{n > K} 2^{pn} nu(B_n), or NaN when no cheap bound applies yet.
double reference_remainder(const ReferenceMeasure& nu, double p, int K) {
    const double t = nu.moment_order_finite();
    if (std::isfinite(t)) {
        if (t <= p) return kInf;
        const double q = 0.5 * (p + t);
        const double M = moment(nu, q);
        return M * pow2(q) * pow2((p - q) * (K + 1)) / (1.0 - pow2(p - q));
    }
    return outside_cube_bound(nu, K) == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
}

using detail::Item;

void sort_items(std::vector<Item>& items, const DiscreteMeasure& mu, const DiscreteMeasure* nu) {
    auto loc = [&](const Item& it) { return it.from_mu ? mu.point(it.atom) : nu->point(it.atom); };
    std::sort(items.begin(), items.end(), [&](const Item& a, const Item& b) {
        if (a.code != b.code) return a.code < b.code;
        const auto pa = loc(a), pb = loc(b);
        if (const auto c = std::lexicographical_compare_three_way(pa.begin(), pa.end(), pb.begin(), pb.end());
            c != 0)
            return c < 0;
        if (a.from_mu != b.from_mu) return a.from_mu;
        return a.atom < b.atom;
    });
}

// Fills shell.levels from sorted items; stops at the first separated level
// when `allow_separation`.
void fill_levels(ShellAccount& shell, const std::vector<Item>& items, const DiscreteMeasure& mu,
                 const DiscreteMeasure* nu, const ReferenceMeasure* ref, std::size_t depth, std::size_t dim) {
    for (std::size_t l = 1; l <= depth; ++l) {
        const int shift = static_cast<int>(dim * (depth - l));
        LevelAccount level;
        bool pure = true;
        std::size_t i = 0;
        while (i < items.size()) {
            const std::uint64_t prefix = items[i].code >> shift;
            CellMass cell{prefix, 0.0, 0.0};
            const std::size_t first = i;
            for (; i < items.size() && (items[i].code >> shift) == prefix; ++i) {
                const Item& it = items[i];
                if (it.from_mu) {
                    cell.mu += mu.weight(it.atom);
                } else {
                    cell.nu += nu->weight(it.atom);
                }
                if (pure && i > first && !detail::same_location(items[first], it, mu, nu)) pure = false;
            }
            if (ref != nullptr) cell.nu = cell_mass(*ref, cell_box(prefix, l, dim, shell.shell), shell.shell);
            level.cells.push_back(cell);
        }
        if (ref != nullptr) {
            double inside = 0.0;
            for (const auto& c : level.cells) inside += c.nu;
            level.nu_elsewhere = std::max(0.0, shell.nu_mass - inside);
        }
        shell.levels.push_back(std::move(level));
        if (ref == nullptr && pure) {
            shell.separated = true;
            break;
        }
    }
}

// Normalized per-shell D_p (without the 2^{pn} factor) and its truncation.
DpResult shell_dp(const ShellAccount& s, double p, std::size_t depth) {
    const double a = s.mu_mass, b = s.nu_mass;
    double sum = 0.0, last = 0.0;
    for (std::size_t l = 0; l < s.levels.size(); ++l) {
        const LevelAccount& lev = s.levels[l];
        double S = lev.nu_elsewhere / b;
        for (const auto& c : lev.cells) S += std::fabs(c.mu / a - c.nu / b);
        sum += pow2(-p * static_cast<double>(l + 1)) * S;
        last = S;
    }
    const double pref = 0.5 * (pow2(p) - 1.0);
    DpResult r;
    if (s.separated) {
        sum += last * pow2(-p * static_cast<double>(s.levels.size())) / (pow2(p) - 1.0);
    } else {
        r.truncation_bound = pow2(-p * static_cast<double>(depth));
    }
    r.value = pref * sum;
    return r;
}

}  // namespace

namespace detail {

std::uint64_t point_code(std::span<const double> x, int shell, std::size_t depth) {
    std::uint64_t idx[64];
    for (std::size_t k = 0; k < x.size(); ++k) idx[k] = axis_cell_index(std::ldexp(x[k], -shell), depth);
    return interleave({idx, x.size()}, depth);
}

bool same_location(const Item& a, const Item& b, const DiscreteMeasure& mu, const DiscreteMeasure* nu) {
    const auto pa = a.from_mu ? mu.point(a.atom) : nu->point(a.atom);
    const auto pb = b.from_mu ? mu.point(b.atom) : nu->point(b.atom);
    return std::equal(pa.begin(), pa.end(), pb.begin());
}

ShellItems collect_shells(const DiscreteMeasure& mu, const DiscreteMeasure* nu, std::size_t depth,
                          std::optional<int> n_max) {
    std::vector<int> smu(mu.size()), snu(nu ? nu->size() : 0);
    int n_top = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) n_top = std::max(n_top, smu[i] = shell_index(mu.point(i)));
    for (std::size_t j = 0; j < snu.size(); ++j) n_top = std::max(n_top, snu[j] = shell_index(nu->point(j)));
    ShellItems out;
    out.n_max = n_max.value_or(n_top);
    if (out.n_max < 0) throw std::invalid_argument("n_max must be non-negative");
    const auto shells = static_cast<std::size_t>(out.n_max) + 1;
    out.items.resize(shells);
    out.mu_mass.assign(shells, 0.0);
    out.nu_mass.assign(shells, 0.0);
    const auto beyond = static_cast<std::size_t>(std::max(0, n_top - out.n_max));
    out.mu_beyond.assign(beyond, 0.0);
    out.nu_beyond.assign(beyond, 0.0);
    auto place = [&](const DiscreteMeasure& m, const std::vector<int>& sh, bool from_mu) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            const int n = sh[i];
            if (n > out.n_max) {
                (from_mu ? out.mu_beyond : out.nu_beyond)[static_cast<std::size_t>(n - out.n_max - 1)] += m.weight(i);
                continue;
            }
            const auto ns = static_cast<std::size_t>(n);
            (from_mu ? out.mu_mass : out.nu_mass)[ns] += m.weight(i);
            out.items[ns].push_back({point_code(m.point(i), n, depth), static_cast<std::uint32_t>(i), from_mu});
        }
    };
    place(mu, smu, true);
    if (nu) place(*nu, snu, false);
    for (auto& v : out.items) sort_items(v, mu, nu);
    return out;
}

}  // namespace detail

double kappa(double p, std::size_t d) {
    check_p(p);
    return pow2(p * (1.0 + 0.5 * static_cast<double>(d))) * (pow2(p) + 1.0) / (pow2(p) - 1.0);
}

std::size_t default_depth(std::size_t d) {
    if (d == 0) throw std::invalid_argument("dimension must be positive");
    if (d == 1) return 24;
    return std::min(max_depth(d), (48 + d - 1) / d);
}

std::size_t max_depth(std::size_t d) {
    if (d == 0) throw std::invalid_argument("dimension must be positive");
    return std::min<std::size_t>(52, 64 / d);
}

int shell_index(std::span<const double> x) {
    int n = 0;
    for (double v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite coordinate");
        n = std::max(n, axis_shell(v));
    }
    return n;
}

std::uint64_t axis_cell_index(double x, std::size_t level) {
    if (!(x > -1.0 && x <= 1.0)) throw std::invalid_argument("coordinate outside (-1, 1]");
    if (level == 0) return 0;
    // Exact in binary floating point for level <= 52.
    const double t = std::ldexp(x + 1.0, static_cast<int>(level) - 1);
    const double k = std::ceil(t) - 1.0;
    return static_cast<std::uint64_t>(std::max(0.0, k));
}

std::vector<std::uint64_t> decode_cell(std::uint64_t code, std::size_t level, std::size_t dim) {
    std::vector<std::uint64_t> idx(dim, 0);
    for (std::size_t b = 0; b < level; ++b)
        for (std::size_t k = 0; k < dim; ++k) {
            const std::size_t bit = b * dim + (dim - 1 - k);
            idx[k] |= ((code >> bit) & 1u) << b;
        }
    return idx;
}

double LevelAccount::l1() const {
    double s = nu_elsewhere;
    for (const auto& c : cells) s += std::fabs(c.mu - c.nu);
    return s;
}

DyadicAccount build_account(const DiscreteMeasure& mu, const DiscreteMeasure& nu, std::size_t depth,
                            std::optional<int> n_max) {
    if (mu.dim() != nu.dim()) throw std::invalid_argument("measures differ in dimension");
    check_depth(depth, mu.dim());
    auto si = detail::collect_shells(mu, &nu, depth, n_max);
    DyadicAccount acc{mu.dim(), depth, si.n_max, {}, std::move(si.mu_beyond), std::move(si.nu_beyond)};
    acc.shells.resize(si.items.size());
    for (std::size_t n = 0; n < si.items.size(); ++n) {
        ShellAccount& s = acc.shells[n];
        s.shell = static_cast<int>(n);
        s.mu_mass = si.mu_mass[n];
        s.nu_mass = si.nu_mass[n];
        if (!si.items[n].empty()) fill_levels(s, si.items[n], mu, &nu, nullptr, depth, mu.dim());
    }
    return acc;
}

DyadicAccount build_account(const DiscreteMeasure& mu, const ReferenceMeasure& nu, std::size_t depth,
                            std::optional<int> n_max) {
    if (mu.dim() != nu.dim()) throw std::invalid_argument("measures differ in dimension");
    if (const DiscreteMeasure* atoms = nu.as_discrete()) return build_account(mu, *atoms, depth, n_max);
    check_depth(depth, mu.dim());
    auto si = detail::collect_shells(mu, nullptr, depth, n_max);
    DyadicAccount acc{mu.dim(), depth, si.n_max, {}, std::move(si.mu_beyond), {}};
    acc.nu_beyond.resize(acc.mu_beyond.size());
    for (std::size_t k = 0; k < acc.nu_beyond.size(); ++k)
        acc.nu_beyond[k] = shell_mass(nu, si.n_max + 1 + static_cast<int>(k));
    acc.shells.resize(si.items.size());
    for (std::size_t n = 0; n < si.items.size(); ++n) {
        ShellAccount& s = acc.shells[n];
        s.shell = static_cast<int>(n);
        s.mu_mass = si.mu_mass[n];
        s.nu_mass = shell_mass(nu, s.shell);
        if (!si.items[n].empty() && s.nu_mass > 0.0)
            fill_levels(s, si.items[n], mu, nullptr, &nu, depth, mu.dim());
    }
    return acc;
}

DpResult dp_from_account(const DyadicAccount& acc, double p) {
    check_p(p);
    DpResult r;
    for (const ShellAccount& s : acc.shells) {
        const double scale = pow2(p * s.shell);
        const double a = s.mu_mass, b = s.nu_mass;
        r.value += scale * std::fabs(a - b);
        const double m = std::min(a, b);
        if (m <= 0.0) continue;
        const DpResult inner = shell_dp(s, p, acc.depth);
        r.value += scale * m * inner.value;
        r.truncation_bound += scale * m * inner.truncation_bound;
    }
    for (std::size_t k = 0; k < acc.mu_beyond.size(); ++k) {
        const double scale = pow2(p * (acc.n_max + 1 + static_cast<double>(k)));
        const double a = acc.mu_beyond[k], b = acc.nu_beyond[k];
        if (a == 0.0 || b == 0.0) {
            r.value += scale * (a + b);
        } else {
            r.truncation_bound += scale * (a + b);
        }
    }
    return r;
}

DpResult dp_compact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, std::size_t depth) {
    check_p(p);
    for (const auto* m : {&mu, &nu})
        for (std::size_t i = 0; i < m->size(); ++i)
            if (shell_index(m->point(i)) != 0) throw std::invalid_argument("atom outside (-1, 1]^d");
    return dp_from_account(build_account(mu, nu, depth, 0), p);
}

DpResult dp_compact(const DiscreteMeasure& mu, const ReferenceMeasure& nu, double p, std::size_t depth) {
    check_p(p);
    if (!nu.supported_in_unit_cube()) throw std::invalid_argument("reference not supported in (-1, 1]^d");
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (shell_index(mu.point(i)) != 0) throw std::invalid_argument("atom outside (-1, 1]^d");
    return dp_from_account(build_account(mu, nu, depth, 0), p);
}

DpResult dp_noncompact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, std::size_t depth,
                       std::optional<int> n_max) {
    check_p(p);
    return dp_from_account(build_account(mu, nu, depth, n_max), p);
}

DpResult dp_noncompact(const DiscreteMeasure& mu, const ReferenceMeasure& nu, double p, std::size_t depth,
                       std::optional<int> n_max) {
    check_p(p);
    if (nu.as_discrete() != nullptr) return dp_noncompact(mu, *nu.as_discrete(), p, depth, n_max);
    const DyadicAccount acc = build_account(mu, nu, depth, n_max);
    DpResult r = dp_from_account(acc, p);
    // Shells past the last atom carry only reference mass: exact terms 2^{pn} nu(B_n).
    const int n_top = acc.n_max + static_cast<int>(acc.mu_beyond.size());
    const int n_cap = static_cast<int>(std::floor(990.0 / p));
    for (int n = n_top + 1;; ++n) {
        const double R = reference_remainder(nu, p, n - 1);
        if (!std::isnan(R) && (R == 0.0 || R <= 1e-16 * r.value || !std::isfinite(R))) {
            r.truncation_bound += R;
            break;
        }
        if (n > n_cap) {
            r.truncation_bound = std::isnan(R) ? kInf : r.truncation_bound + R;
            break;
        }
        r.value += pow2(p * n) * shell_mass(nu, n);
    }
    return r;
}

FlattenedSum flattened_from_account(const DyadicAccount& acc, double p) {
    check_p(p);
    FlattenedSum f;
    f.tail_exact = true;
    const double geo = 1.0 / (pow2(p) - 1.0);
    const auto L = static_cast<double>(acc.depth);
    for (const ShellAccount& s : acc.shells) {
        const double scale = pow2(p * s.shell);
        const double a = s.mu_mass, b = s.nu_mass;
        double part = std::fabs(a - b);
        if (s.levels.empty()) {
            // No cell is shared: every level contributes a + b.
            part += (a + b) * (1.0 - pow2(-p * L)) * geo;
            f.tail += scale * (a + b) * pow2(-p * L) * geo;
        } else {
            double last = 0.0;
            for (std::size_t l = 0; l < s.levels.size(); ++l) {
                last = s.levels[l].l1();
                part += pow2(-p * static_cast<double>(l + 1)) * last;
            }
            const auto done = static_cast<double>(s.levels.size());
            if (s.separated) {
                part += last * (pow2(-p * done) - pow2(-p * L)) * geo;
                f.tail += scale * last * pow2(-p * L) * geo;
            } else {
                f.tail += scale * (a + b) * pow2(-p * L) * geo;
                f.tail_exact = false;
            }
        }
        f.partial += scale * part;
    }
    const double full = pow2(p) * geo;  // sum_{l>=0} 2^{-pl}
    for (std::size_t k = 0; k < acc.mu_beyond.size(); ++k) {
        const double scale = pow2(p * (acc.n_max + 1 + static_cast<double>(k)));
        const double a = acc.mu_beyond[k], b = acc.nu_beyond[k];
        f.tail += scale * (a + b) * full;
        if (a > 0.0 && b > 0.0) f.tail_exact = false;
    }
    return f;
}

FlattenedSum flattened_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, std::size_t depth,
                         std::optional<int> n_max) {
    return flattened_from_account(build_account(mu, nu, depth, n_max), p);
}

FlattenedSum flattened_bound(const DiscreteMeasure& mu, const ReferenceMeasure& nu, double p, std::size_t depth,
                         std::optional<int> n_max) {
    check_p(p);
    if (nu.as_discrete() != nullptr) return flattened_bound(mu, *nu.as_discrete(), p, depth, n_max);
    const DyadicAccount acc = build_account(mu, nu, depth, n_max);
    FlattenedSum f = flattened_from_account(acc, p);
    const double full = pow2(p) / (pow2(p) - 1.0);
    const int n_top = acc.n_max + static_cast<int>(acc.mu_beyond.size());
    const int n_cap = static_cast<int>(std::floor(990.0 / p));
    for (int n = n_top + 1;; ++n) {
        const double R = reference_remainder(nu, p, n - 1);
        if (!std::isnan(R) && (R == 0.0 || R <= 1e-16 * f.total() || !std::isfinite(R))) {
            if (R != 0.0) f.tail_exact = false;
            f.tail += full * R;
            break;
        }
        if (n > n_cap) {
            f.tail_exact = false;
            f.tail = std::isnan(R) ? kInf : f.tail + full * R;
            break;
        }
        f.tail += pow2(p * n) * shell_mass(nu, n) * full;
    }
    return f;
}

double flattened_constant(double p) {
    check_p(p);
    return std::max({1.0, 0.5 * (pow2(p) - 1.0), 2.0 - pow2(1.0 - p)});
}

}  // namespace wrate::dyadic
