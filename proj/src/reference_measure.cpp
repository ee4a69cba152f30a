// SPDX-License-Identifier: MIT
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

#include "quadrature.hpp"
#include "wrate/measures.hpp"
#include "wrate/rng.hpp"

namespace wrate {

namespace {

bool inside_unit_cube(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return v > -1.0 && v <= 1.0; });
}

bool inside_box(std::span<const double> x, std::span<const double> lo, std::span<const double> hi) {
    for (std::size_t k = 0; k < x.size(); ++k)
        if (!(x[k] > lo[k] && x[k] <= hi[k])) return false;
    return true;
}

struct AxisRule {
    std::vector<double> x;
    std::vector<double> w;  // includes the marginal density
};

void append_panels(AxisRule& r, double lo, double hi, const auto& density, int panels) {
    static const detail::GaussRule g = detail::gauss_legendre(16);
    std::vector<double> cuts{lo};
    if (lo < 0.0 && hi > 0.0) cuts.push_back(0.0);
    cuts.push_back(hi);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double h = (cuts[c + 1] - cuts[c]) / panels;
        for (int k = 0; k < panels; ++k) {
            const double mid = cuts[c] + (k + 0.5) * h;
            for (std::size_t i = 0; i < g.nodes.size(); ++i) {
                const double x = mid + 0.5 * h * g.nodes[i];
                r.x.push_back(x);
                r.w.push_back(0.5 * h * g.weights[i] * density(x));
            }
        }
    }
}

AxisRule axis_rule(const Law1D& law, int panels) {
    AxisRule r;
    switch (law.kind()) {
        case Law1D::Kind::uniform: {
            const double dens = 1.0 / (law.b() - law.a());
            append_panels(r, law.a(), law.b(), [dens](double) { return dens; }, panels);
            break;
        }
        case Law1D::Kind::split_uniform: {
            const double dens = 0.5 / (1.0 - law.a());
            append_panels(r, -1.0, -law.a(), [dens](double) { return dens; }, panels);
            append_panels(r, law.a(), 1.0, [dens](double) { return dens; }, panels);
            break;
        }
        case Law1D::Kind::normal: {
            const double m = law.a(), s = law.b();
            append_panels(r, m - 12.0 * s, m + 12.0 * s,
                          [m, s](double x) { return normal_pdf((x - m) / s) / s; }, 4 * panels);
            break;
        }
        case Law1D::Kind::pareto_symmetric:
            throw std::domain_error("no quadrature rule for unbounded Pareto marginals");
    }
    return r;
}

}  // namespace

ReferenceMeasure ReferenceMeasure::two_point(std::vector<double> a, std::vector<double> b, double w) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("two_point: points must share a positive dimension");
    if (!(w > 0.0 && w < 1.0)) throw std::invalid_argument("two_point: weight must lie in (0, 1)");
    ReferenceMeasure r(Kind::two_point, a.size());
    std::vector<double> coords(a);
    coords.insert(coords.end(), b.begin(), b.end());
    r.atoms_.emplace(a.size(), std::move(coords), std::vector<double>{w, 1.0 - w});
    return r;
}

ReferenceMeasure ReferenceMeasure::split_support(std::size_t dim, double gap) {
    if (dim == 0) throw std::invalid_argument("split_support: dimension must be positive");
    ReferenceMeasure r(Kind::split_support, dim);
    r.marginals_.push_back(Law1D::split_uniform(gap));
    for (std::size_t k = 1; k < dim; ++k) r.marginals_.push_back(Law1D::uniform(-1.0, 1.0));
    r.param_ = gap;
    return r;
}

ReferenceMeasure ReferenceMeasure::uniform_cube(std::size_t dim, double radius) {
    if (dim == 0) throw std::invalid_argument("uniform_cube: dimension must be positive");
    if (!(radius > 0.0)) throw std::invalid_argument("uniform_cube: radius must be positive");
    ReferenceMeasure r(Kind::uniform_cube, dim);
    r.marginals_.assign(dim, Law1D::uniform(-radius, radius));
    r.param_ = radius;
    return r;
}

ReferenceMeasure ReferenceMeasure::pareto_radial(std::size_t dim, double tail_index, std::size_t proxy_size,
                                                 std::uint64_t proxy_seed) {
    if (dim == 0) throw std::invalid_argument("pareto_radial: dimension must be positive");
    if (!(tail_index > 0.0)) throw std::invalid_argument("pareto_radial requires q > 0");
    ReferenceMeasure r(Kind::pareto_radial, dim);
    r.tail_index_ = tail_index;
    if (dim == 1) {
        r.marginals_.push_back(Law1D::pareto_symmetric(tail_index));
    } else {
        Rng rng(proxy_seed);
        r.atoms_ = empirical(dim, r.sample(proxy_size, rng));
    }
    return r;
}

ReferenceMeasure ReferenceMeasure::gaussian(std::vector<double> mean, std::vector<double> variance) {
    if (mean.empty() || mean.size() != variance.size())
        throw std::invalid_argument("gaussian: mean and variance must share a positive dimension");
    ReferenceMeasure r(Kind::gaussian, mean.size());
    for (std::size_t k = 0; k < mean.size(); ++k) {
        if (!(variance[k] > 0.0)) throw std::invalid_argument("gaussian: variances must be positive");
        r.marginals_.push_back(Law1D::normal(mean[k], std::sqrt(variance[k])));
    }
    return r;
}

ReferenceMeasure ReferenceMeasure::product(std::vector<Law1D> marginals) {
    if (marginals.empty()) throw std::invalid_argument("product: need at least one marginal");
    ReferenceMeasure r(Kind::product_of_1d, marginals.size());
    r.marginals_ = std::move(marginals);
    return r;
}

ReferenceMeasure ReferenceMeasure::discrete_proxy(DiscreteMeasure proxy) {
    ReferenceMeasure r(Kind::discrete_proxy, proxy.dim());
    r.atoms_.emplace(std::move(proxy));
    return r;
}

std::string ReferenceMeasure::describe() const {
    switch (kind_) {
        case Kind::two_point: return fmt::format("two_point(d={})", dim_);
        case Kind::split_support: return fmt::format("split_support(d={},gap={})", dim_, param_);
        case Kind::uniform_cube: return fmt::format("uniform_cube(d={},radius={})", dim_, param_);
        case Kind::pareto_radial: return fmt::format("pareto_radial(d={},q={})", dim_, tail_index_);
        case Kind::gaussian: return fmt::format("gaussian(d={})", dim_);
        case Kind::product_of_1d: {
            std::string s = "product(";
            for (std::size_t k = 0; k < marginals_.size(); ++k) s += (k ? "," : "") + marginals_[k].describe();
            return s + ")";
        }
        case Kind::discrete_proxy: return fmt::format("discrete_proxy(d={},atoms={})", dim_, atoms_->size());
    }
    return "?";
}

double ReferenceMeasure::moment_order_finite() const {
    if (kind_ == Kind::pareto_radial) return tail_index_;
    return std::numeric_limits<double>::infinity();
}

bool ReferenceMeasure::has_analytic_box_masses() const {
    switch (kind_) {
        case Kind::two_point:
        case Kind::split_support:
        case Kind::uniform_cube:
        case Kind::gaussian:
        case Kind::product_of_1d: return true;
        case Kind::pareto_radial: return dim_ == 1;
        case Kind::discrete_proxy: return false;
    }
    return false;
}

double ReferenceMeasure::box_mass(std::span<const double> lo, std::span<const double> hi) const {
    if (lo.size() != dim_ || hi.size() != dim_) throw std::invalid_argument("box_mass: dimension mismatch");
    if (!marginals_.empty()) {
        double m = 1.0;
        for (std::size_t k = 0; k < dim_ && m > 0.0; ++k) m *= marginals_[k].interval_mass(lo[k], hi[k]);
        return m;
    }
    const DiscreteMeasure& a = *atoms_;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (inside_box(a.point(i), lo, hi)) m += a.weight(i);
    return m;
}

bool ReferenceMeasure::supported_in_unit_cube() const {
    if (!marginals_.empty())
        return std::all_of(marginals_.begin(), marginals_.end(), [](const Law1D& l) {
            return l.support_min() >= -1.0 && l.support_max() <= 1.0;
        });
    const DiscreteMeasure& a = *atoms_;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!inside_unit_cube(a.point(i))) return false;
    return true;
}

std::optional<Law1D> ReferenceMeasure::law1d() const {
    if (dim_ == 1 && !marginals_.empty()) return marginals_.front();
    return std::nullopt;
}

const DiscreteMeasure* ReferenceMeasure::as_discrete() const noexcept {
    return atoms_ ? &*atoms_ : nullptr;
}

void ReferenceMeasure::sample(Rng& rng, std::span<double> out) const {
    switch (kind_) {
        case Kind::two_point:
        case Kind::discrete_proxy: {
            const DiscreteMeasure& a = *atoms_;
            std::size_t idx = 0;
            if (kind_ == Kind::two_point) {
                idx = rng.uniform() < a.weight(0) ? 0 : 1;
            } else {
                // Walker tables would be faster; proxies are sampled rarely.
                double u = rng.uniform(), acc = 0.0;
                idx = a.size() - 1;
                for (std::size_t i = 0; i < a.size(); ++i) {
                    acc += a.weight(i);
                    if (u < acc) { idx = i; break; }
                }
            }
            std::copy_n(a.point(idx).begin(), dim_, out.begin());
            return;
        }
        case Kind::pareto_radial:
            if (dim_ > 1) {
                const double radius = std::pow(rng.uniform_pos(), -1.0 / tail_index_);
                double s;
                do {
                    s = 0.0;
                    for (std::size_t k = 0; k < dim_; ++k) {
                        out[k] = rng.normal();
                        s += out[k] * out[k];
                    }
                } while (s == 0.0);
                const double f = radius / std::sqrt(s);
                for (std::size_t k = 0; k < dim_; ++k) out[k] *= f;
                return;
            }
            [[fallthrough]];
        default:
            for (std::size_t k = 0; k < dim_; ++k) out[k] = marginals_[k].sample(rng);
    }
}

std::vector<double> ReferenceMeasure::sample(std::size_t n, Rng& rng) const {
    std::vector<double> out(n * dim_);
    for (std::size_t i = 0; i < n; ++i) sample(rng, std::span<double>(out.data() + i * dim_, dim_));
    return out;
}

ReferenceMeasure ReferenceMeasure::make_proxy(std::size_t size, Rng& rng) const {
    if (size == 0) throw std::invalid_argument("proxy size must be positive");
    return discrete_proxy(empirical(dim_, sample(size, rng)));
}

double moment(const ReferenceMeasure& mu, double q) {
    if (!(q > 0.0)) throw std::invalid_argument("moment order must be > 0");
    if (q >= mu.moment_order_finite())
        throw std::invalid_argument(fmt::format("moment of order {} is infinite for {}", q, mu.describe()));
    switch (mu.kind()) {
        case ReferenceMeasure::Kind::two_point:
        case ReferenceMeasure::Kind::discrete_proxy: return moment(*mu.as_discrete(), q);
        case ReferenceMeasure::Kind::pareto_radial: {
            const double t = mu.moment_order_finite();
            return t / (t - q);  // radius has density t r^{-t-1} on r >= 1 in every dimension
        }
        default: break;
    }
    const auto& marg = mu.marginals();
    if (marg.size() == 1) return marg[0].abs_moment(q);
    if (q == 2.0) {
        double s = 0.0;
        for (const auto& l : marg) s += l.abs_moment(2.0);
        return s;
    }
    const bool centered_isotropic_normal = std::all_of(marg.begin(), marg.end(), [&](const Law1D& l) {
        return l.kind() == Law1D::Kind::normal && l.a() == 0.0 && l.b() == marg[0].b();
    });
    if (centered_isotropic_normal) {
        // |x|^2 / s^2 is chi-square with d degrees of freedom.
        const double d = static_cast<double>(marg.size());
        return std::pow(marg[0].b(), q) * std::pow(2.0, 0.5 * q) * std::tgamma(0.5 * (d + q)) / std::tgamma(0.5 * d);
    }
    if (marg.size() > 3)
        throw std::domain_error(fmt::format("no closed form for M_{} of {}", q, mu.describe()));
    const int panels = marg.size() == 2 ? 16 : 6;
    std::vector<AxisRule> rules;
    for (const auto& l : marg) rules.push_back(axis_rule(l, panels));
    double total = 0.0;
    if (marg.size() == 2) {
        for (std::size_t i = 0; i < rules[0].x.size(); ++i)
            for (std::size_t j = 0; j < rules[1].x.size(); ++j) {
                const double r2 = rules[0].x[i] * rules[0].x[i] + rules[1].x[j] * rules[1].x[j];
                total += rules[0].w[i] * rules[1].w[j] * std::pow(r2, 0.5 * q);
            }
    } else {
        for (std::size_t i = 0; i < rules[0].x.size(); ++i)
            for (std::size_t j = 0; j < rules[1].x.size(); ++j) {
                const double r2ij = rules[0].x[i] * rules[0].x[i] + rules[1].x[j] * rules[1].x[j];
                const double wij = rules[0].w[i] * rules[1].w[j];
                double inner = 0.0;
                for (std::size_t k = 0; k < rules[2].x.size(); ++k)
                    inner += rules[2].w[k] * std::pow(r2ij + rules[2].x[k] * rules[2].x[k], 0.5 * q);
                total += wij * inner;
            }
    }
    return total;
}

}  // namespace wrate
