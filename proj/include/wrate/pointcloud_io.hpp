// SPDX-License-Identifier: MIT
//
// Point-cloud CSV: one point per row, d columns of decimal floats, optional
// final `weight` column. A header row is recognized by a non-numeric first
// token; the weight column exists only when the header names it `weight`.
#pragma once

#include <string>
#include <string_view>

#include "wrate/measures.hpp"

namespace wrate {

struct TransportPlan;

/// Throws ParseError (message includes `source_name`).
DiscreteMeasure parse_point_cloud(std::string_view text, const std::string& source_name = "<input>");
DiscreteMeasure read_point_cloud(const std::string& path);
std::string format_point_cloud(const DiscreteMeasure& m);

/// Rows `src_index,tgt_index,mass`, header included.
std::string format_plan_csv(const TransportPlan& plan);

}  // namespace wrate
