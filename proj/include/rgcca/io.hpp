#pragma once

// File formats:
//   * data CSV: header row, one row per sample, '.' decimals, no missing values
//   * group file: one group per line, comma-separated zero-based indices,
//     optional trailing ";weight=<real>"; '#' starts a comment
//   * model config: INI-style "key = value" with a [model] section and one
//     [block <k>] section per block; `penalty` lines may repeat
//   * grid file: "<axis> = v1, v2, ..." one axis per line

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rgcca/core.hpp"
#include "rgcca/error.hpp"
#include "rgcca/model.hpp"
#include "rgcca/penalty.hpp"

namespace rgcca::io {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

inline double require_double(const std::string& s, const std::string& where) {
  auto v = parse_double(s);
  if (!v) throw InvalidArgument(where + ": '" + s + "' is not a number");
  return *v;
}

inline long require_integer(const std::string& s, const std::string& where) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument(where + ": '" + s + "' is not an integer");
  }
  return value;
}

inline bool require_bool(const std::string& s, const std::string& where) {
  std::string v = s;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw InvalidArgument(where + ": '" + s + "' is not a boolean");
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace detail

struct Table {
  std::vector<std::string> header;
  Matrix values;
};

/// Numeric CSV. With `header` false, a first row that does not parse as
/// numbers is still treated as a header.
inline Table read_csv(const std::filesystem::path& path, bool header = true) {
  auto in = detail::open_input(path);
  Table table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split(line, ',');
    if (first) {
      first = false;
      const bool numeric = std::all_of(cells.begin(), cells.end(), [](const std::string& c) {
        return detail::parse_double(c).has_value();
      });
      if (header || !numeric) {
        table.header = std::move(cells);
        continue;
      }
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string where = path.string() + ":" + std::to_string(line_no) + ":" +
                                std::to_string(j + 1);
      if (cells[j].empty()) throw InvalidArgument(where + ": missing value");
      const double v = detail::require_double(cells[j], where);
      if (!std::isfinite(v)) throw InvalidArgument(where + ": non-finite value");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                            ": inconsistent number of columns");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument(path.string() + ": no data rows");
  if (!table.header.empty() && table.header.size() != rows.front().size()) {
    throw InvalidArgument(path.string() + ": header and data column counts differ");
  }
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return table;
}

/// A vector stored as a single column or a single row, with optional header.
inline Vector read_vector(const std::filesystem::path& path) {
  const Table t = read_csv(path, false);
  if (t.values.cols() == 1) return t.values.col(0);
  if (t.values.rows() == 1) return t.values.row(0).transpose();
  throw InvalidArgument(path.string() + ": expected a single row or column of numbers");
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const Matrix& values) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << "\n";
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_number(values(i, j));
    out << "\n";
  }
}

inline std::vector<std::string> column_names(const std::string& prefix, Index count) {
  std::vector<std::string> names;
  for (Index j = 0; j < count; ++j) names.push_back(prefix + std::to_string(j));
  return names;
}

struct GroupSpec {
  std::vector<std::vector<Index>> groups;
  std::optional<std::vector<double>> weights;
};

inline GroupSpec parse_groups(std::istream& in, const std::string& source) {
  GroupSpec spec;
  std::vector<double> weights;
  bool any_weight = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    double weight = 1.0;
    if (auto semi = line.find(';'); semi != std::string::npos) {
      const std::string tail = detail::trim(line.substr(semi + 1));
      line = detail::trim(line.substr(0, semi));
      if (tail.rfind("weight", 0) != 0) throw InvalidArgument(where + ": expected ';weight=<real>'");
      const auto eq = tail.find('=');
      if (eq == std::string::npos) throw InvalidArgument(where + ": expected ';weight=<real>'");
      weight = detail::require_double(detail::trim(tail.substr(eq + 1)), where);
      any_weight = true;
    }
    std::vector<Index> group;
    for (const auto& cell : detail::split(line, ',')) {
      group.push_back(static_cast<Index>(detail::require_integer(cell, where)));
    }
    spec.groups.push_back(std::move(group));
    weights.push_back(weight);
  }
  if (any_weight) spec.weights = std::move(weights);
  return spec;
}

inline GroupSpec read_groups(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_groups(in, path.string());
}

struct PenaltyConfig {
  std::string kind;  // "tv" or "group_l12"
  double omega = 0.0;
  double mu = 5e-4;
  std::string groups_file;  // as written in the config
  GroupSpec groups;
};

struct BlockConfig {
  std::string name;
  double tau = 1.0;
  std::optional<double> s;
  double c = 1.0;
  std::vector<PenaltyConfig> penalties;
};

struct ModelConfig {
  int components = 1;
  Scheme scheme = Scheme::Horst;
  bool scale = false;
  Tolerances tolerances;
  std::vector<BlockConfig> blocks;
};

namespace detail {

inline PenaltyConfig parse_penalty(const std::string& value, const std::filesystem::path& base,
                                   const std::string& where) {
  std::istringstream words(value);
  PenaltyConfig pen;
  words >> pen.kind;
  if (pen.kind != "tv" && pen.kind != "group_l12") {
    throw InvalidArgument(where + ": unknown penalty '" + pen.kind +
                          "' (expected tv or group_l12)");
  }
  bool have_omega = false;
  std::string token;
  while (words >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw InvalidArgument(where + ": expected key=value, got " + token);
    const std::string key = token.substr(0, eq);
    const std::string val = token.substr(eq + 1);
    if (key == "omega") {
      pen.omega = require_double(val, where);
      have_omega = true;
    } else if (key == "mu") {
      pen.mu = require_double(val, where);
    } else if (key == "groups") {
      pen.groups_file = val;
      pen.groups = read_groups(base / val);
    } else {
      throw InvalidArgument(where + ": unknown penalty option '" + key + "'");
    }
  }
  if (!have_omega) throw InvalidArgument(where + ": penalty requires omega=<real>");
  if (pen.kind == "group_l12" && pen.groups.groups.empty()) {
    throw InvalidArgument(where + ": group_l12 requires groups=<file>");
  }
  return pen;
}

}  // namespace detail

/// Parse a model config. Group files are resolved relative to `base`.
inline ModelConfig parse_config(std::istream& in, const std::string& source,
                                const std::filesystem::path& base) {
  ModelConfig cfg;
  std::string section;
  BlockConfig* block = nullptr;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw InvalidArgument(where + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      block = nullptr;
      if (section == "model") continue;
      std::string index;
      if (section.rfind("block ", 0) == 0) index = detail::trim(section.substr(6));
      else if (section.rfind("block.", 0) == 0) index = section.substr(6);
      else throw InvalidArgument(where + ": unknown section [" + section + "]");
      const long k = detail::require_integer(index, where);
      if (k != static_cast<long>(cfg.blocks.size())) {
        throw InvalidArgument(where + ": block sections must appear in order starting at 0");
      }
      cfg.blocks.emplace_back();
      block = &cfg.blocks.back();
      block->name = "block" + std::to_string(k);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument(where + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));

    if (section == "model") {
      auto& t = cfg.tolerances;
      if (key == "components") cfg.components = static_cast<int>(detail::require_integer(value, where));
      else if (key == "scale") cfg.scale = detail::require_bool(value, where);
      else if (key == "center") {
        if (!detail::require_bool(value, where)) {
          throw InvalidArgument(where + ": centering is mandatory (covariances assume centred data)");
        }
      } else if (key == "scheme") {
        if (value == "horst") cfg.scheme = Scheme::Horst;
        else if (value == "centroid") cfg.scheme = Scheme::Centroid;
        else if (value == "factorial") cfg.scheme = Scheme::Factorial;
        else throw InvalidArgument(where + ": unknown scheme '" + value + "'");
        if (cfg.scheme != Scheme::Horst) {
          throw InvalidArgument(where + ": only scheme = horst is supported; the per-block "
                                        "problem is convex only for g(x) = x");
        }
      } else if (key == "eps_outer") t.eps_outer = detail::require_double(value, where);
      else if (key == "eps_inner") t.eps_inner = detail::require_double(value, where);
      else if (key == "eps_dykstra0") t.eps_dykstra0 = detail::require_double(value, where);
      else if (key == "eps_dykstra_floor") t.eps_dykstra_floor = detail::require_double(value, where);
      else if (key == "max_iter_inner") t.max_iter_inner = static_cast<int>(detail::require_integer(value, where));
      else if (key == "max_iter_outer") t.max_iter_outer = static_cast<int>(detail::require_integer(value, where));
      else if (key == "max_iter_dykstra") t.max_iter_dykstra = static_cast<int>(detail::require_integer(value, where));
      else throw InvalidArgument(where + ": unknown model key '" + key + "'");
    } else if (block) {
      if (key == "name") block->name = value;
      else if (key == "tau") block->tau = detail::require_double(value, where);
      else if (key == "s") {
        if (value == "none") block->s.reset();
        else block->s = detail::require_double(value, where);
      } else if (key == "c") block->c = detail::require_double(value, where);
      else if (key == "penalty") block->penalties.push_back(detail::parse_penalty(value, base, where));
      else throw InvalidArgument(where + ": unknown block key '" + key + "'");
    } else {
      throw InvalidArgument(where + ": key outside of a section");
    }
  }
  return cfg;
}

inline ModelConfig read_config(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_config(in, path.string(), path.parent_path());
}

/// Build a validated-shape ModelSpec from a config, a design and block widths.
inline ModelSpec build_model_spec(const ModelConfig& cfg, const Design& design,
                                  const std::vector<Index>& widths) {
  const auto k = static_cast<std::size_t>(design.size());
  if (cfg.blocks.size() != k || widths.size() != k) {
    throw InvalidArgument("config describes " + std::to_string(cfg.blocks.size()) +
                          " blocks, design has " + std::to_string(k) + ", " +
                          std::to_string(widths.size()) + " data files given");
  }
  ModelSpec spec;
  spec.design = design;
  spec.n_components = cfg.components;
  spec.scheme = cfg.scheme;
  spec.tolerances = cfg.tolerances;
  spec.penalties.resize(k);
  for (std::size_t b = 0; b < k; ++b) {
    const BlockConfig& bc = cfg.blocks[b];
    spec.constraints.push_back({bc.tau, bc.s, bc.c});
    for (const auto& pc : bc.penalties) {
      PenaltyAttachment pen;
      pen.omega = pc.omega;
      pen.mu = pc.mu;
      pen.label = pc.kind;
      pen.op = pc.kind == "tv" ? build_tv1d(widths[b])
                               : build_group_l12(pc.groups.groups, widths[b], pc.groups.weights);
      spec.penalties[b].push_back(std::move(pen));
    }
  }
  return spec;
}

inline CvGrid parse_grid(std::istream& in, const std::string& source) {
  CvGrid grid;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument(where + ": expected <axis> = v1, v2, ...");
    GridAxis axis;
    axis.name = detail::trim(line.substr(0, eq));
    for (const auto& cell : detail::split(line.substr(eq + 1), ',')) {
      axis.values.push_back(detail::require_double(cell, where));
    }
    grid.axes.push_back(std::move(axis));
  }
  return grid;
}

inline CvGrid read_grid(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_grid(in, path.string());
}

}  // namespace rgcca::io
