// SPDX-License-Identifier: MIT
#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "wrate/analysis.hpp"
#include "wrate/dyadic.hpp"
#include "wrate/errors.hpp"
#include "wrate/ot_oracle.hpp"
#include "wrate/parallel.hpp"
#include "wrate/pointcloud_io.hpp"
#include "wrate/rng.hpp"
#include "wrate/samplers.hpp"

namespace wrate::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kMkvTag = 0x6d6b76;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Normalizes a raw value: strips quotes, removes blanks inside arrays.
std::string normalize_value(std::string v) {
    v = trim(v);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    if (!v.empty() && v.front() == '[') {
        std::string out;
        for (char c : v)
            if (c != ' ' && c != '\t') out += c;
        return out;
    }
    return v;
}

// Keys that never change the produced content.
bool is_transient(const std::string& key) { return key == "out" || key == "workers"; }

const std::set<std::string>& allowed_keys(const std::string& cmd) {
    static const std::set<std::string> common{"command", "seed", "p", "depth", "format", "out", "workers"};
    static const std::set<std::string> process{"process", "distribution", "d", "radius", "gap", "tail_index",
                                               "point_a", "point_b", "weight_a", "mean", "variance", "coef",
                                               "init_mean", "init_sd", "r", "reps", "oracle", "proxy_size",
                                               "entry_cap", "budget"};
    static const std::map<std::string, std::set<std::string>> table = [] {
        std::map<std::string, std::set<std::string>> t;
        t["dist"] = {"mu", "nu", "n_max", "plan", "plan_out", "entry_cap", "fallback"};
        t["rates"] = process;
        t["rates"].insert("n_grid");
        t["tails"] = process;
        t["tails"].insert({"n", "x_grid", "poissonized"});
        t["mkv"] = {"potential", "beta", "alpha", "d", "dt", "T", "x0", "noise_scale", "proxy_particles", "n_grid",
                    "reps", "trajectory_out"};
        t["bounds"] = {"x_grid", "lambda_grid", "theta", "binom_n", "prob_grid", "z_grid", "regime", "alpha",
                       "gamma", "q", "epsilon", "C", "c", "n_grid", "d", "log_variant"};
        for (auto& [k, v] : t) v.insert(common.begin(), common.end());
        return t;
    }();
    return table.at(cmd);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (r.ec != std::errc() || r.ptr != end) throw ParseError(fmt::format("key '{}': '{}' is not a number", key, v));
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (r.ec != std::errc() || r.ptr != end)
        throw ParseError(fmt::format("key '{}': '{}' is not a nonnegative integer", key, v));
    return out;
}

std::vector<std::string> split_list(const std::string& v) {
    std::string body = v;
    if (!body.empty() && body.front() == '[') {
        if (body.back() != ']') throw ParseError("unterminated array '" + v + "'");
        body = body.substr(1, body.size() - 2);
    }
    std::vector<std::string> items;
    std::string cur;
    std::istringstream ss(body);
    while (std::getline(ss, cur, ','))
        if (auto t = trim(cur); !t.empty()) items.push_back(t);
    return items;
}

class Settings {
public:
    explicit Settings(const Config& c) : c_(c) {}

    bool has(const std::string& k) const { return c_.count(k) != 0; }
    std::string str(const std::string& k, const std::string& def) const { return has(k) ? c_.at(k) : def; }
    std::string req(const std::string& k) const {
        if (!has(k)) throw ParseError(fmt::format("missing required key '{}'", k));
        return c_.at(k);
    }
    double num(const std::string& k, double def) const { return has(k) ? to_double(k, c_.at(k)) : def; }
    std::optional<double> opt_num(const std::string& k) const {
        if (!has(k)) return std::nullopt;
        return to_double(k, c_.at(k));
    }
    std::uint64_t u64(const std::string& k) const { return to_u64(k, req(k)); }
    std::size_t size(const std::string& k, std::size_t def) const {
        return has(k) ? static_cast<std::size_t>(to_u64(k, c_.at(k))) : def;
    }
    bool flag(const std::string& k, bool def) const {
        if (!has(k)) return def;
        const std::string& v = c_.at(k);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ParseError(fmt::format("key '{}': '{}' is not a boolean", k, v));
    }
    std::vector<double> list(const std::string& k) const {
        std::vector<double> out;
        for (const auto& s : split_list(req(k))) out.push_back(to_double(k, s));
        return out;
    }
    std::vector<std::size_t> size_list(const std::string& k) const {
        std::vector<std::size_t> out;
        for (const auto& s : split_list(req(k))) out.push_back(static_cast<std::size_t>(to_u64(k, s)));
        return out;
    }
    std::vector<double> point(const std::string& k, std::size_t d, double def) const {
        if (!has(k)) return std::vector<double>(d, def);
        auto v = list(k);
        if (v.size() == 1) v.assign(d, v[0]);
        if (v.size() != d) throw ParseError(fmt::format("key '{}' needs {} coordinates", k, d));
        return v;
    }

private:
    const Config& c_;
};

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(fmt::format("cannot open {} '{}'", what, path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool json_format(const Settings& s) {
    const std::string f = s.str("format", "csv");
    if (f != "csv" && f != "json") throw ParseError("format must be csv or json");
    return f == "json";
}

std::string header_lines(const Config& cfg) {
    std::string h = fmt::format("# version = {}\n# command = {}\n# config_hash = {:016x}\n", kVersion,
                                cfg.at("command"), config_hash(cfg));
    for (const auto& [k, v] : cfg)
        if (!is_transient(k)) h += fmt::format("# config.{} = {}\n", k, v);
    return h;
}

ordered_json header_json(const Config& cfg) {
    ordered_json j;
    j["version"] = kVersion;
    j["command"] = cfg.at("command");
    j["config_hash"] = fmt::format("{:016x}", config_hash(cfg));
    j["config"] = ordered_json::object();
    for (const auto& [k, v] : cfg)
        if (!is_transient(k)) j["config"][k] = v;
    return j;
}

// Header plus body for csv; for json the body is embedded under `table`.
std::string assemble(const Config& cfg, bool json, const std::string& csv_body, const std::string& json_body) {
    if (!json) return header_lines(cfg) + csv_body;
    ordered_json j = header_json(cfg);
    j["table"] = ordered_json::parse(json_body);
    return j.dump(2) + "\n";
}

void emit(const Settings& s, const std::string& text, std::ostream& out) {
    if (!s.has("out")) {
        out << text;
        return;
    }
    std::ofstream f(s.str("out", ""), std::ios::binary);
    if (!f) throw ParseError(fmt::format("cannot write output file '{}'", s.str("out", "")));
    f << text;
}

ReferenceMeasure make_reference(const Settings& s) {
    const std::size_t d = s.size("d", 1);
    if (d == 0) throw ParseError("d must be positive");
    const std::string kind = s.req("distribution");
    if (kind == "uniform_cube") return ReferenceMeasure::uniform_cube(d, s.num("radius", 1.0));
    if (kind == "split_support") return ReferenceMeasure::split_support(d, s.num("gap", 0.5));
    if (kind == "pareto") return ReferenceMeasure::pareto_radial(d, s.num("tail_index", 1.5));
    if (kind == "gaussian")
        return ReferenceMeasure::gaussian(s.point("mean", d, 0.0), std::vector<double>(d, s.num("variance", 1.0)));
    if (kind == "two_point")
        return ReferenceMeasure::two_point(s.point("point_a", d, 0.0), s.point("point_b", d, 1.0),
                                           s.num("weight_a", 0.5));
    throw ParseError(fmt::format("unknown distribution '{}'", kind));
}

ProcessSpec make_process(const Settings& s) {
    const std::string kind = s.str("process", "iid");
    if (kind == "iid") return ProcessSpec::iid(make_reference(s));
    if (kind == "ar1") return ProcessSpec::ar1({s.num("coef", 0.5), s.size("d", 1)});
    if (kind == "markov") {
        MarkovSpec m;
        m.a = s.num("coef", 0.5);
        m.dim = s.size("d", 1);
        m.init_mean = s.num("init_mean", 0.0);
        m.init_sd = s.num("init_sd", 1.0);
        m.r = s.num("r", 2.0);
        return ProcessSpec::markov(m);
    }
    throw ParseError(fmt::format("unknown process '{}'", kind));
}

McConfig make_mc(const Settings& s, std::size_t dim) {
    McConfig mc;
    mc.p = s.num("p", 1.0);
    mc.reps = s.size("reps", 200);
    mc.oracle = parse_oracle_mode(s.str("oracle", dim == 1 && mc.p >= 1.0 ? "exact_1d" : "dp_only"));
    mc.proxy_size = s.size("proxy_size", 0);
    mc.entry_cap = s.size("entry_cap", kDefaultEntryCap);
    if (s.has("depth")) mc.depth = s.size("depth", 0);
    mc.seed = s.u64("seed");
    mc.workers = std::max<std::size_t>(1, s.size("workers", 1));
    mc.budget = s.num("budget", 1e9);
    mc.poissonized = s.flag("poissonized", false);
    return mc;
}

void add_fit(Metadata& m, const std::vector<double>& n, const std::vector<double>& v, const std::string& name) {
    if (n.size() < 4) return;
    for (double x : v)
        if (!(x > 0.0) || !std::isfinite(x)) return;
    const RateFit f = fit_rate(n, v);
    m.emplace_back("fit_exponent_" + name, format_number(f.exponent));
    m.emplace_back("fit_r_squared_" + name, format_number(f.r_squared));
}

int run_rates(const Config& cfg, std::ostream& out, std::ostream& err) {
    const Settings s(cfg);
    const bool json = json_format(s);
    const ProcessSpec process = make_process(s);
    const McConfig mc = make_mc(s, process.dim());
    RateTable t = mc_mean_distance(process, s.size_list("n_grid"), mc);
    std::vector<double> n, tp, dp;
    for (const auto& r : t.rows) {
        n.push_back(static_cast<double>(r.n));
        tp.push_back(r.mean_tp);
        dp.push_back(r.mean_dp);
        err << fmt::format("N={} mean_Tp={} mean_Dp={}\n", r.n, format_number(r.mean_tp), format_number(r.mean_dp));
    }
    if (mc.oracle != OracleMode::dp_only) add_fit(t.metadata, n, tp, "Tp");
    add_fit(t.metadata, n, dp, "Dp");
    emit(s, assemble(cfg, json, to_csv(t), to_json(t)), out);
    return kOk;
}

int run_tails(const Config& cfg, std::ostream& out, std::ostream& err) {
    const Settings s(cfg);
    const bool json = json_format(s);
    const ProcessSpec process = make_process(s);
    const McConfig mc = make_mc(s, process.dim());
    const TailTable t = mc_tail(process, s.size("n", 100), s.list("x_grid"), mc);
    for (const auto& r : t.rows)
        err << fmt::format("x={} prob={}\n", format_number(r.x), format_number(r.empirical_prob));
    emit(s, assemble(cfg, json, to_csv(t), to_json(t)), out);
    return kOk;
}

struct MkvRow {
    std::size_t n;
    double disc, disc_se, var, var_se;
};

int run_mkv(const Config& cfg, std::ostream& out, std::ostream& err) {
    const Settings s(cfg);
    const bool json = json_format(s);
    McKeanVlasovSpec spec;
    const std::string pot = s.str("potential", "quadratic");
    if (pot == "quadratic") {
        spec.potential = McKeanVlasovSpec::Potential::quadratic;
    } else if (pot == "power") {
        spec.potential = McKeanVlasovSpec::Potential::power;
    } else {
        throw ParseError(fmt::format("unknown potential '{}'", pot));
    }
    spec.beta = s.num("beta", 1.0);
    spec.alpha = s.num("alpha", 4.0);
    spec.dim = s.size("d", 1);
    spec.dt = s.num("dt", 0.005);
    spec.horizon = s.num("T", 10.0);
    spec.x0 = s.num("x0", 1.0);
    spec.noise_scale = s.num("noise_scale", 1.0);
    spec.proxy_particles = s.size("proxy_particles", 10000);
    validate(spec);
    const std::uint64_t seed = s.u64("seed");
    const std::size_t reps = s.size("reps", 100);
    if (reps < 2) throw ParseError("reps must be at least 2");
    std::vector<std::size_t> grid = s.size_list("n_grid");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const std::size_t workers = std::max<std::size_t>(1, s.size("workers", 1));

    if (s.has("trajectory_out")) {
        std::ofstream f(s.str("trajectory_out", ""), std::ios::binary);
        if (!f) throw ParseError("cannot write trajectory file '" + s.str("trajectory_out", "") + "'");
        f << "step,particle";
        for (std::size_t c = 0; c < spec.dim; ++c) f << ",x" << c;
        f << "\n";
        McKeanVlasovSpec traced = spec;
        traced.observer = [&f, d = spec.dim](std::size_t k, double, std::span<const double> x) {
            for (std::size_t i = 0; i < x.size() / d; ++i) {
                f << k << ',' << i;
                for (std::size_t c = 0; c < d; ++c) f << ',' << format_number(x[i * d + c]);
                f << '\n';
            }
        };
        Rng rng(derive_seed(seed, {kMkvTag, grid.front(), 0}));
        (void)simulate_mkv(traced, grid.front(), rng);
    }

    std::vector<double> disc(grid.size() * reps), var(grid.size() * reps);
    parallel_for(disc.size(), workers, [&](std::size_t k) {
        const std::size_t n = grid[k / reps];
        Rng rng(derive_seed(seed, {kMkvTag, n, k % reps}));
        const auto r = simulate_mkv(spec, n, rng);
        disc[k] = r.discrepancy;
        double m = 0.0, v = 0.0;
        for (double x : r.interacting) m += x;
        m /= static_cast<double>(r.interacting.size());
        for (double x : r.interacting) v += (x - m) * (x - m);
        var[k] = v / static_cast<double>(r.interacting.size());
    });

    auto stats = [&](const std::vector<double>& v, std::size_t row) {
        double m = 0.0, ss = 0.0;
        for (std::size_t r = 0; r < reps; ++r) m += v[row * reps + r];
        m /= static_cast<double>(reps);
        for (std::size_t r = 0; r < reps; ++r) ss += (v[row * reps + r] - m) * (v[row * reps + r] - m);
        return std::pair{m, std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps))};
    };
    Metadata meta{{"experiment", "mkv"},
                  {"potential", pot},
                  {"d", std::to_string(spec.dim)},
                  {"dt", format_number(spec.dt)},
                  {"T", format_number(spec.horizon)},
                  {"reps", std::to_string(reps)},
                  {"seed", std::to_string(seed)}};
    std::vector<MkvRow> rows;
    std::vector<double> ns, ds;
    for (std::size_t row = 0; row < grid.size(); ++row) {
        const auto [dm, dse] = stats(disc, row);
        const auto [vm, vse] = stats(var, row);
        rows.push_back({grid[row], dm, dse, vm, vse});
        ns.push_back(static_cast<double>(grid[row]));
        ds.push_back(dm);
        err << fmt::format("N={} discrepancy={} variance={}\n", grid[row], format_number(dm), format_number(vm));
    }
    add_fit(meta, ns, ds, "discrepancy");

    std::string csv;
    for (const auto& [k, v] : meta) csv += fmt::format("# {} = {}\n", k, v);
    csv += "N,mean_discrepancy,std_err,mean_variance,std_err_variance,reps\n";
    ordered_json j;
    j["metadata"] = ordered_json::object();
    for (const auto& [k, v] : meta) j["metadata"][k] = v;
    j["rows"] = ordered_json::array();
    for (const auto& r : rows) {
        csv += fmt::format("{},{},{},{},{},{}\n", r.n, format_number(r.disc), format_number(r.disc_se),
                           format_number(r.var), format_number(r.var_se), reps);
        j["rows"].push_back({{"N", r.n},
                             {"mean_discrepancy", r.disc},
                             {"std_err", r.disc_se},
                             {"mean_variance", r.var},
                             {"std_err_variance", r.var_se},
                             {"reps", reps}});
    }
    emit(s, assemble(cfg, json, csv, j.dump()), out);
    return kOk;
}

struct BoundRow {
    std::string quantity;
    std::optional<double> lambda, n, prob, x, theta;
    double value;
};

int run_bounds(const Config& cfg, std::ostream& out, std::ostream&) {
    const Settings s(cfg);
    const bool json = json_format(s);
    std::vector<BoundRow> rows;
    const std::optional<double> theta = s.opt_num("theta");
    const std::vector<double> xs = s.has("x_grid") ? s.list("x_grid") : std::vector<double>{};
    for (double x : xs) {
        rows.push_back({"f", {}, {}, {}, x, {}, f_fn(x)});
        rows.push_back({"g", {}, {}, {}, x, {}, g_fn(x)});
    }
    if (s.has("lambda_grid")) {
        for (double lam : s.list("lambda_grid")) {
            const auto put = [&](const char* q, std::optional<double> x, std::optional<double> th,
                                 std::optional<double> v) {
                if (v) rows.push_back({q, lam, {}, {}, x, th, *v});
            };
            if (theta) {
                const auto b = poisson_bounds(lam, std::nullopt, theta);
                put("poisson_mgf", {}, theta, b.mgf);
                put("poisson_abs_mgf_bound", {}, theta, b.abs_mgf_bound);
            }
            for (double x : xs) {
                const auto b = poisson_bounds(lam, x, std::nullopt);
                put("poisson_upper_tail", x, {}, b.upper_tail);
                put("poisson_two_sided", x, {}, b.two_sided);
                put("poisson_trivial", x, {}, b.trivial);
            }
        }
    }
    if (s.has("binom_n")) {
        const std::uint64_t bn = s.u64("binom_n");
        const std::vector<double> zs = s.has("z_grid") ? s.list("z_grid") : std::vector<double>{};
        for (double prob : s.list("prob_grid")) {
            const auto put = [&](const char* q, std::optional<double> z, std::optional<double> th,
                                 std::optional<double> v) {
                if (v) rows.push_back({q, {}, static_cast<double>(bn), prob, z, th, *v});
            };
            if (theta) {
                const auto b = binomial_bounds(bn, prob, std::nullopt, theta);
                put("binomial_mgf", {}, theta, b.mgf);
                put("binomial_mgf_bound", {}, theta, b.mgf_bound);
            }
            for (double z : zs) {
                const auto b = binomial_bounds(bn, prob, z, std::nullopt);
                put("binomial_two_sided", z, {}, b.two_sided);
                put("binomial_trivial", z, {}, b.trivial);
            }
        }
    }
    if (s.has("regime")) {
        EnvelopeParams e;
        const std::string r = s.str("regime", "");
        if (r == "exp_strong") {
            e.regime = EnvelopeParams::Regime::exp_strong;
        } else if (r == "exp_weak") {
            e.regime = EnvelopeParams::Regime::exp_weak;
        } else if (r == "poly") {
            e.regime = EnvelopeParams::Regime::poly;
        } else {
            throw ParseError(fmt::format("unknown envelope regime '{}'", r));
        }
        e.alpha = s.num("alpha", 0.0);
        e.gamma = s.num("gamma", 1.0);
        e.q = s.num("q", 0.0);
        e.epsilon = s.num("epsilon", 0.0);
        e.C = s.num("C", 1.0);
        e.c = s.num("c", 1.0);
        e.log_variant = s.flag("log_variant", false);
        const double p = s.num("p", 1.0);
        const std::size_t d = s.size("d", 1);
        for (std::size_t n : s.size_list("n_grid"))
            for (double x : xs) {
                const auto v = envelope(e, p, d, static_cast<double>(n), x);
                rows.push_back({"envelope_a", {}, static_cast<double>(n), {}, x, {}, v.a});
                rows.push_back({"envelope_b", {}, static_cast<double>(n), {}, x, {}, v.b});
            }
    }

    auto cell = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    std::string csv = "quantity,lambda,n,prob,x,theta,value\n";
    ordered_json j = ordered_json::array();
    for (const auto& r : rows) {
        csv += fmt::format("{},{},{},{},{},{},{}\n", r.quantity, cell(r.lambda), cell(r.n), cell(r.prob), cell(r.x),
                           cell(r.theta), format_number(r.value));
        ordered_json o;
        o["quantity"] = r.quantity;
        for (const auto& [k, v] : {std::pair{"lambda", r.lambda}, {"n", r.n}, {"prob", r.prob}, {"x", r.x},
                                    {"theta", r.theta}})
            if (v) o[k] = *v;
        o["value"] = r.value;
        j.push_back(o);
    }
    emit(s, assemble(cfg, json, csv, ordered_json{{"rows", j}}.dump()), out);
    return kOk;
}

int run_dist(const Config& cfg, std::ostream& out, std::ostream& err) {
    const Settings s(cfg);
    const bool json = json_format(s);
    const DiscreteMeasure mu = read_point_cloud(s.req("mu"));
    const DiscreteMeasure nu = read_point_cloud(s.req("nu"));
    if (mu.dim() != nu.dim()) throw ParseError("point clouds differ in dimension");
    const double p = s.num("p", 1.0);
    const std::size_t d = mu.dim();
    const std::size_t depth = s.size("depth", dyadic::default_depth(d));
    std::optional<int> n_max;
    if (s.has("n_max")) n_max = static_cast<int>(s.size("n_max", 0));
    const std::size_t cap = s.size("entry_cap", kDefaultEntryCap);
    const std::string fallback = s.str("fallback", "none");
    if (fallback != "none" && fallback != "dp_only") throw ParseError("fallback must be none or dp_only");

    const auto dp = dyadic::dp_noncompact(mu, nu, p, depth, n_max);
    const double kappa = dyadic::kappa(p, d);
    const CostSpec cost{p, CostSpec::Mode::raw};
    double tp = std::numeric_limits<double>::quiet_NaN();
    std::string method = "none";
    std::optional<TransportPlan> exact_plan;
    try {
        if (d == 1 && p >= 1.0) {
            tp = w1d_exact(mu, nu, cost);
            method = "quantile";
        } else {
            auto r = wexact_discrete(mu, nu, cost, cap);
            tp = r.value;
            exact_plan = std::move(r.plan);
            method = "network_simplex";
        }
    } catch (const CapExceeded& e) {
        if (fallback != "dp_only") throw;
        err << e.what() << "; reporting D_p only\n";
    }
    double ratio = std::numeric_limits<double>::quiet_NaN();
    if (!std::isnan(tp)) ratio = dp.value > 0.0 ? tp / (kappa * dp.value) : 0.0;

    if (s.has("plan_out")) {
        const std::string kind = s.str("plan", "exact");
        TransportPlan plan;
        if (kind == "dyadic") {
            plan = dyadic::build_coupling(mu, nu, p, depth);
        } else if (kind == "exact") {
            plan = exact_plan ? *exact_plan : wexact_discrete(mu, nu, cost, cap).plan;
        } else {
            throw ParseError("plan must be exact or dyadic");
        }
        std::ofstream f(s.str("plan_out", ""), std::ios::binary);
        if (!f) throw ParseError("cannot write plan file '" + s.str("plan_out", "") + "'");
        f << format_plan_csv(plan);
    }

    const std::vector<std::pair<std::string, std::string>> q{{"dim", std::to_string(d)},
                                                             {"atoms_mu", std::to_string(mu.size())},
                                                             {"atoms_nu", std::to_string(nu.size())},
                                                             {"p", format_number(p)},
                                                             {"depth", std::to_string(depth)},
                                                             {"D_p", format_number(dp.value)},
                                                             {"truncation_bound", format_number(dp.truncation_bound)},
                                                             {"T_p", format_number(tp)},
                                                             {"T_p_method", method},
                                                             {"kappa", format_number(kappa)},
                                                             {"ratio", format_number(ratio)}};
    std::string csv = "quantity,value\n";
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : q) {
        csv += k + "," + v + "\n";
        j[k] = v;
    }
    emit(s, assemble(cfg, json, csv, j.dump()), out);
    return kOk;
}

}  // namespace

Config parse_config(std::string_view text, const std::string& source_name) {
    Config cfg;
    std::size_t line_no = 0, pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        std::string line = trim(raw);
        // Strip trailing comments outside quotes.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line = trim(line.substr(0, i));
                break;
            }
        }
        if (line.empty() || line.front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(fmt::format("{}:{}: expected 'key = value'", source_name, line_no));
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError(fmt::format("{}:{}: empty key", source_name, line_no));
        cfg[key] = normalize_value(line.substr(eq + 1));
    }
    return cfg;
}

std::string serialize_config(const Config& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg)
        if (!is_transient(k)) out += k + " = " + v + "\n";
    return out;
}

Config extract_config(std::string_view output) {
    Config cfg;
    const auto first = output.find_first_not_of(" \n");
    if (first != std::string_view::npos && output[first] == '{') {
        const auto j = ordered_json::parse(output);
        for (const auto& [k, v] : j.at("config").items()) cfg[k] = v.get<std::string>();
        return cfg;
    }
    std::istringstream ss{std::string(output)};
    std::string line;
    const std::string prefix = "# config.";
    while (std::getline(ss, line)) {
        if (line.rfind(prefix, 0) != 0) continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        cfg[line.substr(prefix.size(), eq - prefix.size())] = line.substr(eq + 3);
    }
    return cfg;
}

std::uint64_t config_hash(const Config& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : serialize_config(cfg)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dyadic transport bounds and empirical convergence experiments", "wrate"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    struct Flags {
        std::string config, seed, out, format, workers, p, depth, reps;
        std::vector<std::string> sets;
        std::vector<std::string> files;
    };
    std::map<std::string, Flags> flags;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"dist", "D_p, exact T_p and the domination ratio for two point-cloud CSV files"},
        {"rates", "Monte Carlo mean distances over an N grid"},
        {"tails", "Monte Carlo exceedance frequencies at fixed N"},
        {"mkv", "McKean-Vlasov particle system versus its nonlinear particles"},
        {"bounds", "Tabulate f, g, Poisson, binomial and envelope bounds"}};
    for (const auto& [name, desc] : commands) {
        Flags& f = flags[name];
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", f.config, "Config file (key = value lines)");
        sub->add_option("--seed", f.seed, "Root seed (unsigned 64-bit)");
        sub->add_option("--out", f.out, "Output path (default stdout)");
        sub->add_option("--format", f.format, "csv or json");
        sub->add_option("--workers", f.workers, "Worker threads");
        sub->add_option("--p", f.p, "Cost exponent");
        sub->add_option("--depth", f.depth, "Dyadic depth");
        sub->add_option("--reps", f.reps, "Repetitions");
        sub->add_option("--set", f.sets, "Override any config key: key=value");
        if (name == "dist") sub->add_option("files", f.files, "mu.csv nu.csv")->expected(0, 2);
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    const Flags& f = flags.at(cmd);
    try {
        Config cfg;
        if (!f.config.empty()) cfg = parse_config(read_file(f.config, "config file"), f.config);
        if (cfg.count("command") && cfg.at("command") != cmd)
            throw ParseError(fmt::format("config is for '{}', not '{}'", cfg.at("command"), cmd));
        cfg["command"] = cmd;
        for (const auto& [k, v] : {std::pair{"seed", &f.seed}, {"out", &f.out}, {"format", &f.format},
                                    {"workers", &f.workers}, {"p", &f.p}, {"depth", &f.depth}, {"reps", &f.reps}})
            if (!v->empty()) cfg[k] = normalize_value(*v);
        for (const auto& kv : f.sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + kv + "'");
            cfg[trim(kv.substr(0, eq))] = normalize_value(kv.substr(eq + 1));
        }
        if (f.files.size() >= 1) cfg["mu"] = f.files[0];
        if (f.files.size() >= 2) cfg["nu"] = f.files[1];
        const auto& allowed = allowed_keys(cmd);
        for (const auto& [k, v] : cfg)
            if (!allowed.count(k)) throw ParseError(fmt::format("unknown key '{}' for command '{}'", k, cmd));
        if (!cfg.count("seed")) throw ParseError("a seed is required (--seed or `seed = ...`)");
        (void)to_u64("seed", cfg.at("seed"));

        if (cmd == "dist") return run_dist(cfg, out, err);
        if (cmd == "rates") return run_rates(cfg, out, err);
        if (cmd == "tails") return run_tails(cfg, out, err);
        if (cmd == "mkv") return run_mkv(cfg, out, err);
        return run_bounds(cfg, out, err);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const CapExceeded& e) {
        err << "error: " << e.what() << "\n";
        return kBudgetError;
    } catch (const BudgetExceeded& e) {
        err << "error: " << e.what() << "\n";
        return kBudgetError;
    } catch (const NumericalAbort& e) {
        err << "error: " << e.what() << "\n";
        return kNumericalAbort;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
}

}  // namespace wrate::cli
