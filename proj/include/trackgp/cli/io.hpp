#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trackgp/cli/config.hpp"
#include "trackgp/gp.hpp"

namespace trackgp::cli {

/// Reads a "t,y" file. Rows are sorted by t; duplicate times and malformed or
/// non-finite entries raise ParseError naming the line.
Dataset ingest_csv(const std::string& path);
Dataset parse_data_csv(const std::string& text);

/// Reference values from a "t,y" data file or from the `mean` column of a
/// prediction file, in row order.
std::vector<double> read_reference_csv(const std::string& path);

/// Deterministic synthetic data for the configured generator and seed.
std::vector<Observation> generate_data(const GeneratorConfig& config, std::uint64_t seed);

/// Round-trip decimal form used in every emitted file.
std::string format_number(double x);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace trackgp::cli
