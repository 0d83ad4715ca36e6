#include "trackgp/cli/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "trackgp/errors.hpp"

namespace trackgp::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, int line) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError("line " + std::to_string(line) + ": malformed number '" + cell + "'");
  }
  if (!std::isfinite(x)) {
    throw ParseError("line " + std::to_string(line) + ": non-finite value '" + cell + "'");
  }
  return x;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> lines;
};

Table parse_table(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string content = trim(raw);
    if (content.empty()) continue;
    if (table.header.empty()) {
      table.header = split(content);
      continue;
    }
    const auto cells = split(content);
    if (cells.size() != table.header.size()) {
      throw ParseError("line " + std::to_string(line) + ": expected " +
                       std::to_string(table.header.size()) + " columns, got " +
                       std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c, line));
    table.rows.push_back(std::move(row));
    table.lines.push_back(line);
  }
  if (table.header.empty()) throw ParseError("empty file");
  if (table.rows.empty()) throw ParseError("file has a header but no rows");
  return table;
}

}  // namespace

Dataset parse_data_csv(const std::string& text) {
  const Table table = parse_table(text);
  if (table.header != std::vector<std::string>{"t", "y"}) {
    throw ParseError("line 1: expected header 't,y'");
  }
  std::vector<std::pair<double, int>> order;
  std::vector<Observation> points;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double t = table.rows[i][0];
    if (t < 0.0) {
      throw ParseError("line " + std::to_string(table.lines[i]) + ": negative time");
    }
    points.push_back({t, table.rows[i][1]});
    order.emplace_back(t, table.lines[i]);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i].first == order[i - 1].first) {
      throw ParseError("line " + std::to_string(std::max(order[i].second, order[i - 1].second)) +
                       ": duplicate time " + format_number(order[i].first));
    }
  }
  return Dataset::from_points(std::move(points));
}

Dataset ingest_csv(const std::string& path) { return parse_data_csv(read_file(path)); }

std::vector<double> read_reference_csv(const std::string& path) {
  const Table table = parse_table(read_file(path));
  std::size_t column = table.header.size();
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == "mean" || table.header[i] == "y") {
      column = i;
      break;
    }
  }
  if (column == table.header.size()) throw ParseError("line 1: no 'y' or 'mean' column");
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back(row[column]);
  return out;
}

std::vector<Observation> generate_data(const GeneratorConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Observation> out;
  const int n = config.n;
  const int divisions = config.endpoint ? n - 1 : n;
  for (int i = 0; i < n; ++i) {
    const double t = divisions == 0
                         ? config.t_start
                         : config.t_start + (config.t_end - config.t_start) * i / divisions;
    double y = 0.0;
    switch (config.kind) {
      case GeneratorKind::Transient:
        y = -config.amplitude * std::exp(-t / config.decay) * std::cos(config.frequency * t);
        break;
      case GeneratorKind::PeriodicExample:
        y = std::sin(2.0 * t) + 0.5 * std::sin(4.0 * t + 1.0);
        break;
    }
    if (config.noise_std > 0.0) y += config.noise_std * noise(rng);
    out.push_back({t, y});
  }
  return out;
}

std::string format_number(double x) {
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << contents;
  if (!out) throw ConfigError("write failed for " + path);
}

}  // namespace trackgp::cli
