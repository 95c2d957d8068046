#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vrsd/dataset.hpp"

namespace vrsd {

struct TraceRecord {
  std::size_t epoch = 0;
  double passes = 0.0;
  std::int64_t wall_ns = 0;
  double objective = 0.0;
  /// objective - F*, NaN until a reference optimum is attached.
  double gap = std::numeric_limits<double>::quiet_NaN();
};

inline bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

inline bool operator==(const TraceRecord& a, const TraceRecord& b) {
  return a.epoch == b.epoch && same_bits(a.passes, b.passes) && a.wall_ns == b.wall_ns &&
         same_bits(a.objective, b.objective) && same_bits(a.gap, b.gap);
}

struct Trace {
  std::string solver;
  std::string dataset;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<TraceRecord> records;
};

/// Field-wise comparison of everything the CSV schema carries.
inline bool same_csv_fields(const Trace& a, const Trace& b) {
  return a.solver == b.solver && a.dataset == b.dataset && a.seed == b.seed &&
         a.records == b.records;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Objective gaps are floored here so that log plots stay finite.
inline constexpr double kGapFloor = 1e-16;

struct GapPoint {
  double passes;
  double gap;
  std::int64_t wall_ns;
};

inline std::vector<GapPoint> gap(const Trace& trace, std::string_view reference_dataset,
                                 double f_star) {
  if (!trace.dataset.empty() && !reference_dataset.empty() && trace.dataset != reference_dataset)
    throw std::invalid_argument("gap: trace is for '" + trace.dataset +
                                "' but the reference is for '" + std::string(reference_dataset) + "'");
  std::vector<GapPoint> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records)
    out.push_back({r.passes, std::max(r.objective - f_star, kGapFloor), r.wall_ns});
  return out;
}

inline void attach_gaps(Trace& trace, std::string_view reference_dataset, double f_star) {
  const auto pts = gap(trace, reference_dataset, f_star);
  for (std::size_t k = 0; k < pts.size(); ++k) trace.records[k].gap = pts[k].gap;
}

/// Passes at the first record whose gap is <= target, or NaN.
inline double passes_to_gap(const Trace& trace, double target) {
  for (const auto& r : trace.records)
    if (r.gap <= target) return r.passes;
  return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------- CSV

inline constexpr std::string_view kTraceCsvHeader =
    "solver,dataset,seed,epoch,passes,wall_ns,objective,gap";

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t row) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw std::runtime_error("trace csv row " + std::to_string(row) + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

template <typename T>
T parse_csv_number(const std::string& s, std::size_t row, const char* field) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw std::runtime_error("trace csv row " + std::to_string(row) + ": bad " + field + " '" + s + "'");
  return v;
}

}  // namespace detail

inline std::string trace_csv_string(std::span<const Trace> traces) {
  std::string out(kTraceCsvHeader);
  out += '\n';
  for (const auto& t : traces) {
    const std::string prefix = detail::csv_field(t.solver) + "," + detail::csv_field(t.dataset) +
                               "," + std::to_string(t.seed) + ",";
    for (const auto& r : t.records) {
      out += prefix;
      out += std::to_string(r.epoch) + ",";
      out += detail::format_double(r.passes) + ",";
      out += std::to_string(r.wall_ns) + ",";
      out += detail::format_double(r.objective) + ",";
      if (!std::isnan(r.gap)) out += detail::format_double(r.gap);
      out += '\n';
    }
  }
  return out;
}

/// Consecutive rows sharing (solver, dataset, seed) form one trace.
inline std::vector<Trace> parse_trace_csv(std::string_view text) {
  std::vector<Trace> out;
  std::size_t pos = 0;
  std::size_t row = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++row;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != kTraceCsvHeader)
        throw std::runtime_error("trace csv row 1: missing or wrong header");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line, row);
    if (f.size() != 8)
      throw std::runtime_error("trace csv row " + std::to_string(row) + ": expected 8 fields, got " +
                               std::to_string(f.size()));
    const auto seed = detail::parse_csv_number<std::uint64_t>(f[2], row, "seed");
    if (out.empty() || out.back().solver != f[0] || out.back().dataset != f[1] ||
        out.back().seed != seed) {
      Trace t;
      t.solver = f[0];
      t.dataset = f[1];
      t.seed = seed;
      out.push_back(std::move(t));
    }
    TraceRecord r;
    r.epoch = detail::parse_csv_number<std::size_t>(f[3], row, "epoch");
    r.passes = detail::parse_csv_number<double>(f[4], row, "passes");
    r.wall_ns = detail::parse_csv_number<std::int64_t>(f[5], row, "wall_ns");
    r.objective = detail::parse_csv_number<double>(f[6], row, "objective");
    if (!f[7].empty()) r.gap = detail::parse_csv_number<double>(f[7], row, "gap");
    out.back().records.push_back(r);
  }
  if (!header_seen) throw std::runtime_error("trace csv row 1: missing header");
  return out;
}

/// Writes via a temporary file and rename, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_trace_csv(std::span<const Trace> traces, const std::filesystem::path& path) {
  write_file_atomic(path, trace_csv_string(traces));
}

inline std::vector<Trace> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace_csv(ss.str());
}

// --------------------------------------------------------------- JSON

namespace detail {

// JSON has no inf or NaN: NaN becomes null, infinities the strings "inf"/"-inf".
inline nlohmann::json json_double(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double double_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::runtime_error("trace json: bad number '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json trace_to_json(const Trace& t) {
  nlohmann::json j;
  j["solver"] = t.solver;
  j["dataset"] = t.dataset;
  j["seed"] = t.seed;
  j["config_hash"] = t.config_hash;
  auto& recs = j["records"] = nlohmann::json::array();
  for (const auto& r : t.records)
    recs.push_back({{"epoch", r.epoch},
                    {"passes", detail::json_double(r.passes)},
                    {"wall_ns", r.wall_ns},
                    {"objective", detail::json_double(r.objective)},
                    {"gap", detail::json_double(r.gap)}});
  return j;
}

inline Trace trace_from_json(const nlohmann::json& j) {
  Trace t;
  t.solver = j.at("solver").get<std::string>();
  t.dataset = j.at("dataset").get<std::string>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.config_hash = j.value("config_hash", std::uint64_t{0});
  for (const auto& jr : j.at("records")) {
    TraceRecord r;
    r.epoch = jr.at("epoch").get<std::size_t>();
    r.passes = detail::double_from_json(jr.at("passes"));
    r.wall_ns = jr.at("wall_ns").get<std::int64_t>();
    r.objective = detail::double_from_json(jr.at("objective"));
    r.gap = detail::double_from_json(jr.at("gap"));
    t.records.push_back(r);
  }
  return t;
}

}  // namespace vrsd
