// SPDX-License-Identifier: MIT
#include "wrate/pointcloud_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "wrate/dyadic.hpp"
#include "wrate/errors.hpp"

namespace wrate {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view tok, double& out) {
    tok = trim(tok);
    if (tok.empty()) return false;
    if (tok.front() == '+') tok.remove_prefix(1);
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

DiscreteMeasure parse_point_cloud(std::string_view text, const std::string& source_name) {
    std::vector<double> coords, weights;
    std::size_t columns = 0;
    bool weighted = false;
    bool first_row = true;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto toks = split_commas(line);
        double first;
        if (first_row && !parse_double(toks.front(), first)) {
            columns = toks.size();
            weighted = toks.back() == "weight";
            first_row = false;
            continue;
        }
        if (first_row) {
            columns = toks.size();
            first_row = false;
        }
        if (toks.size() != columns)
            throw ParseError(fmt::format("{}:{}: expected {} columns, found {}", source_name, line_no, columns, toks.size()));
        const std::size_t ncoord = weighted ? columns - 1 : columns;
        for (std::size_t k = 0; k < toks.size(); ++k) {
            double v;
            if (!parse_double(toks[k], v))
                throw ParseError(fmt::format("{}:{}: not a number: '{}'", source_name, line_no, toks[k]));
            if (k < ncoord) coords.push_back(v);
            else weights.push_back(v);
        }
        if (!weighted) weights.push_back(1.0);
    }
    const std::size_t dim = weighted ? columns - 1 : columns;
    if (weights.empty() || dim == 0) throw ParseError(fmt::format("{}: no points", source_name));
    try {
        return DiscreteMeasure(dim, std::move(coords), std::move(weights));
    } catch (const std::invalid_argument& e) {
        throw ParseError(fmt::format("{}: {}", source_name, e.what()));
    }
}

DiscreteMeasure read_point_cloud(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(fmt::format("cannot open point cloud file '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_point_cloud(ss.str(), path);
}

std::string format_point_cloud(const DiscreteMeasure& m) {
    std::string out;
    for (std::size_t k = 0; k < m.dim(); ++k) out += fmt::format("x{},", k);
    out += "weight\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (double v : m.point(i)) out += fmt::format("{:.17g},", v);
        out += fmt::format("{:.17g}\n", m.weight(i));
    }
    return out;
}

std::string format_plan_csv(const TransportPlan& plan) {
    std::string out = "src_index,tgt_index,mass\n";
    for (const auto& e : plan.entries) out += fmt::format("{},{},{:.17g}\n", e.source, e.target, e.mass);
    return out;
}

}  // namespace wrate
