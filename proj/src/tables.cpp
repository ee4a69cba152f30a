// SPDX-License-Identifier: MIT
#include <cmath>

#include <fmt/format.h>

#include "json.hpp"
#include "wrate/analysis.hpp"

namespace wrate {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string metadata_lines(const Metadata& m) {
    std::string out;
    for (const auto& [k, v] : m) out += fmt::format("# {} = {}\n", k, v);
    return out;
}

ordered_json metadata_json(const Metadata& m) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : m) j[k] = v;
    return j;
}

ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);
}

std::string to_csv(const RateTable& t) {
    std::string out = metadata_lines(t.metadata);
    out += "N,mean_Tp,mean_Dp,std_err,reps,std_err_Dp\n";
    for (const auto& r : t.rows)
        out += fmt::format("{},{},{},{},{},{}\n", r.n, format_number(r.mean_tp), format_number(r.mean_dp),
                           format_number(r.std_err), r.reps, format_number(r.std_err_dp));
    return out;
}

std::string to_csv(const TailTable& t) {
    std::string out = metadata_lines(t.metadata);
    out += "x,empirical_prob,wilson_lo,wilson_hi\n";
    for (const auto& r : t.rows)
        out += fmt::format("{},{},{},{}\n", format_number(r.x), format_number(r.empirical_prob),
                           format_number(r.wilson.lo), format_number(r.wilson.hi));
    return out;
}

std::string to_json(const RateTable& t) {
    ordered_json j;
    j["metadata"] = metadata_json(t.metadata);
    j["rows"] = ordered_json::array();
    for (const auto& r : t.rows)
        j["rows"].push_back({{"N", r.n},
                             {"mean_Tp", number(r.mean_tp)},
                             {"mean_Dp", number(r.mean_dp)},
                             {"std_err", number(r.std_err)},
                             {"reps", r.reps},
                             {"std_err_Dp", number(r.std_err_dp)}});
    return j.dump(2) + "\n";
}

std::string to_json(const TailTable& t) {
    ordered_json j;
    j["metadata"] = metadata_json(t.metadata);
    j["N"] = t.n;
    j["rows"] = ordered_json::array();
    for (const auto& r : t.rows)
        j["rows"].push_back({{"x", number(r.x)},
                             {"empirical_prob", number(r.empirical_prob)},
                             {"wilson_lo", number(r.wilson.lo)},
                             {"wilson_hi", number(r.wilson.hi)}});
    return j.dump(2) + "\n";
}

}  // namespace wrate
