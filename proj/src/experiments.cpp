// SPDX-License-Identifier: MIT
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include <fmt/format.h>

#include "wrate/analysis.hpp"
#include "wrate/dyadic.hpp"
#include "wrate/errors.hpp"
#include "wrate/parallel.hpp"
#include "wrate/rng.hpp"

namespace wrate {

namespace {

constexpr std::uint64_t kMeanTag = 0x6d65616e;   // stream ids for derive_seed
constexpr std::uint64_t kTailTag = 0x7461696c;
constexpr std::uint64_t kProxyTag = 0x70726f78;

struct RepValue {
    double tp = std::numeric_limits<double>::quiet_NaN();
    double dp = 0.0;
    bool checked = false;
    bool violated = false;
};

class Evaluator {
public:
    Evaluator(const ProcessSpec& process, const McConfig& cfg, std::size_t max_n)
        : process_(process), cfg_(cfg), dim_(process.dim()) {
        if (!(cfg.p > 0.0)) throw std::invalid_argument("p must be positive");
        depth_ = cfg.depth.value_or(dyadic::default_depth(dim_));
        kappa_ = dyadic::kappa(cfg.p, dim_);
        const ReferenceMeasure& target = process.target();
        switch (cfg.oracle) {
            case OracleMode::exact_1d:
                if (dim_ != 1 || cfg.p < 1.0)
                    throw std::invalid_argument("exact_1d oracle needs d = 1 and p >= 1; use lp_vs_proxy or dp_only");
                law_ = target.law1d();
                if (!law_ && target.as_discrete() == nullptr)
                    throw std::invalid_argument("exact_1d oracle unavailable for " + target.describe());
                break;
            case OracleMode::lp_vs_proxy:
                if (target.kind() == ReferenceMeasure::Kind::two_point) {
                    proxy_ = std::make_shared<const DiscreteMeasure>(*target.as_discrete());
                } else {
                    proxy_size_ = cfg.proxy_size != 0 ? cfg.proxy_size : 20 * max_n;
                    Rng rng(derive_seed(cfg.seed, {kProxyTag, proxy_size_}));
                    proxy_ = std::make_shared<const DiscreteMeasure>(
                        empirical(dim_, target.sample(proxy_size_, rng)));
                }
                break;
            case OracleMode::dp_only: break;
        }
    }

    [[nodiscard]] std::size_t depth() const { return depth_; }
    [[nodiscard]] std::size_t proxy_size() const { return proxy_size_; }

    // One repetition on a fresh sample of size n.
    RepValue run(std::size_t n, Rng& rng) const {
        const DiscreteMeasure mu_n = empirical(dim_, process_.sample(n, rng));
        RepValue r;
        const auto d = dyadic::dp_noncompact(mu_n, process_.target(), cfg_.p, depth_);
        r.dp = d.value;
        const CostSpec cost{cfg_.p, CostSpec::Mode::raw};
        switch (cfg_.oracle) {
            case OracleMode::exact_1d:
                r.tp = law_ ? w1d_exact(mu_n, *law_, cost) : w1d_exact(mu_n, *process_.target().as_discrete(), cost);
                check(r, r.tp, d);
                break;
            case OracleMode::lp_vs_proxy: {
                r.tp = wexact_discrete(mu_n, *proxy_, cost, cfg_.entry_cap).value;
                check(r, r.tp, dyadic::dp_noncompact(mu_n, *proxy_, cfg_.p, depth_));
                break;
            }
            case OracleMode::dp_only: break;
        }
        return r;
    }

    // Poissonized statistic (K/N) D_p(Psi_N, mu), zero when K = 0.
    double run_poissonized(std::size_t n, Rng& rng) const {
        const std::size_t k = poissonized_sample_size(n, rng);
        if (k == 0) return 0.0;
        const DiscreteMeasure psi = empirical(dim_, process_.sample(k, rng));
        const auto d = dyadic::dp_noncompact(psi, process_.target(), cfg_.p, depth_);
        return static_cast<double>(k) / static_cast<double>(n) * d.value;
    }

private:
    void check(RepValue& r, double tp, const dyadic::DpResult& d) const {
        r.checked = true;
        const double bound = kappa_ * (d.value + d.truncation_bound);
        r.violated = tp > bound * (1.0 + 1e-9) + 1e-12;
    }

    const ProcessSpec& process_;
    const McConfig& cfg_;
    std::size_t dim_;
    std::size_t depth_ = 0;
    double kappa_ = 0.0;
    std::optional<Law1D> law_;
    std::shared_ptr<const DiscreteMeasure> proxy_;
    std::size_t proxy_size_ = 0;
};

void check_budget(const McConfig& cfg, std::size_t max_n) {
    const double work = static_cast<double>(cfg.reps) * static_cast<double>(max_n);
    if (work > cfg.budget)
        throw BudgetExceeded(fmt::format("reps * max N = {} exceeds the budget {}", work, cfg.budget));
}

Metadata base_metadata(const char* experiment, const ProcessSpec& process, const McConfig& cfg,
                       const Evaluator& ev) {
    Metadata m{{"experiment", experiment},
               {"process", process.describe()},
               {"p", format_number(cfg.p)},
               {"d", std::to_string(process.dim())},
               {"oracle", to_string(cfg.oracle)},
               {"reps", std::to_string(cfg.reps)},
               {"seed", std::to_string(cfg.seed)},
               {"depth", std::to_string(ev.depth())}};
    if (cfg.oracle == OracleMode::lp_vs_proxy && ev.proxy_size() != 0) {
        m.emplace_back("proxy_size", std::to_string(ev.proxy_size()));
        m.emplace_back("proxy_note", "T_p measured against an i.i.d. proxy of the reference; proxy bias not corrected");
    }
    return m;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    const double mean = s / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double var = ss / static_cast<double>(v.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace

std::string to_string(OracleMode mode) {
    switch (mode) {
        case OracleMode::exact_1d: return "exact_1d";
        case OracleMode::lp_vs_proxy: return "lp_vs_proxy";
        case OracleMode::dp_only: return "dp_only";
    }
    return {};
}

OracleMode parse_oracle_mode(const std::string& s) {
    if (s == "exact_1d") return OracleMode::exact_1d;
    if (s == "lp_vs_proxy") return OracleMode::lp_vs_proxy;
    if (s == "dp_only") return OracleMode::dp_only;
    throw std::invalid_argument("unknown oracle mode '" + s + "'");
}

RateFit fit_rate(const RateTable& table, RateColumn column) {
    std::vector<double> n, v;
    for (const auto& r : table.rows) {
        n.push_back(static_cast<double>(r.n));
        v.push_back(column == RateColumn::tp ? r.mean_tp : r.mean_dp);
    }
    return fit_rate(n, v);
}

RateTable mc_mean_distance(const ProcessSpec& process, const std::vector<std::size_t>& n_grid, const McConfig& cfg) {
    if (n_grid.empty()) throw std::invalid_argument("empty N grid");
    if (cfg.reps < 2) throw std::invalid_argument("at least two repetitions are needed");
    std::vector<std::size_t> grid = n_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.front() == 0) throw std::invalid_argument("sample sizes must be positive");
    check_budget(cfg, grid.back());
    const Evaluator ev(process, cfg, grid.back());

    const std::size_t reps = cfg.reps;
    std::vector<RepValue> values(grid.size() * reps);
    parallel_for(values.size(), cfg.workers, [&](std::size_t k) {
        const std::size_t row = k / reps, rep = k % reps;
        Rng rng(derive_seed(cfg.seed, {kMeanTag, grid[row], rep}));
        values[k] = ev.run(grid[row], rng);
    });

    RateTable t;
    t.metadata = base_metadata("rates", process, cfg, ev);
    std::size_t checked = 0, violated = 0;
    for (std::size_t row = 0; row < grid.size(); ++row) {
        std::vector<double> tp, dp;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            const RepValue& v = values[row * reps + rep];
            tp.push_back(v.tp);
            dp.push_back(v.dp);
            checked += v.checked;
            violated += v.violated;
        }
        RateRow r;
        r.n = grid[row];
        r.reps = reps;
        const MeanSe sd = mean_se(dp);
        r.mean_dp = sd.mean;
        r.std_err_dp = sd.se;
        if (cfg.oracle == OracleMode::dp_only) {
            r.mean_tp = std::numeric_limits<double>::quiet_NaN();
            r.std_err = sd.se;
        } else {
            const MeanSe st = mean_se(tp);
            r.mean_tp = st.mean;
            r.std_err = st.se;
        }
        t.rows.push_back(r);
    }
    t.metadata.emplace_back("dominance_checked", std::to_string(checked));
    t.metadata.emplace_back("dominance_violations", std::to_string(violated));
    return t;
}

std::vector<double> mc_tail_samples(const ProcessSpec& process, std::size_t n, const McConfig& cfg,
                                    Metadata* metadata) {
    if (n == 0) throw std::invalid_argument("sample size must be positive");
    if (cfg.reps < 1) throw std::invalid_argument("at least one repetition is needed");
    check_budget(cfg, n);
    const Evaluator ev(process, cfg, n);
    std::vector<double> stat(cfg.reps);
    std::vector<RepValue> values(cfg.reps);
    parallel_for(cfg.reps, cfg.workers, [&](std::size_t rep) {
        Rng rng(derive_seed(cfg.seed, {kTailTag, n, rep}));
        if (cfg.poissonized) {
            stat[rep] = ev.run_poissonized(n, rng);
        } else {
            values[rep] = ev.run(n, rng);
            stat[rep] = cfg.oracle == OracleMode::dp_only ? values[rep].dp : values[rep].tp;
        }
    });
    if (metadata != nullptr) {
        *metadata = base_metadata("tails", process, cfg, ev);
        metadata->emplace_back("N", std::to_string(n));
        metadata->emplace_back("statistic", cfg.poissonized                     ? "poissonized (K/N) D_p"
                                            : cfg.oracle == OracleMode::dp_only ? "D_p"
                                                                                : "T_p");
        std::size_t checked = 0, violated = 0;
        for (const auto& v : values) {
            checked += v.checked;
            violated += v.violated;
        }
        metadata->emplace_back("dominance_checked", std::to_string(checked));
        metadata->emplace_back("dominance_violations", std::to_string(violated));
    }
    return stat;
}

TailTable mc_tail(const ProcessSpec& process, std::size_t n, const std::vector<double>& x_grid, const McConfig& cfg) {
    TailTable t;
    t.n = n;
    const auto stat = mc_tail_samples(process, n, cfg, &t.metadata);
    std::vector<double> xs = x_grid;
    std::sort(xs.begin(), xs.end());
    for (double x : xs) {
        if (!(x >= 0.0)) throw std::invalid_argument("thresholds must be nonnegative");
        const auto hits = static_cast<std::size_t>(std::count_if(stat.begin(), stat.end(), [x](double v) { return v >= x; }));
        t.rows.push_back({x, static_cast<double>(hits) / static_cast<double>(stat.size()), wilson_interval(hits, stat.size())});
    }
    return t;
}

}  // namespace wrate
