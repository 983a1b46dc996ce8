#pragma once

#include "steinkd/stein.hpp"

#include <nlohmann/json.hpp>

#include <istream>
#include <string>

namespace steinkd {

/// Reads a sample CSV: one point per row, D coordinate columns and an optional
/// trailing weight column. A header row is optional; with a header the weight
/// column must be named "weight", without one it is recognized by count
/// (D + 1 columns). Missing weights mean uniform 1/N. Weights summing to
/// within [0.99, 1.01] are renormalized; anything else is rejected.
WeightedEmpirical read_sample_csv(std::istream& in, std::size_t dim);
WeightedEmpirical read_sample_csv_file(const std::string& path, std::size_t dim);

nlohmann::json read_json_file(const std::string& path);

}  // namespace steinkd
