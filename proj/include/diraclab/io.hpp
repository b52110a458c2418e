#ifndef DIRACLAB_IO_HPP
#define DIRACLAB_IO_HPP

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "estimates.hpp"
#include "experiments.hpp"
#include "norms.hpp"

#ifndef DIRACLAB_VERSION
#define DIRACLAB_VERSION "0.0.0"
#endif

namespace diraclab::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* tool_version = DIRACLAB_VERSION;

// ---- atomic writes ----

/// Writes to path.tmp and renames over path, so readers never see a partial file.
inline void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---- CSV ----

/// Shortest round-trip form; nan and inf spelled out.
inline std::string cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(long v) { return std::to_string(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }
inline std::string cell(const std::string& v) { return v; }
inline std::string cell(const char* v) { return v; }
inline std::string cell(Verdict v) { return to_string(v); }

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  template <class... A>
  void add(const A&... v) {
    std::vector<std::string> r{cell(v)...};
    if (r.size() != columns.size()) throw std::logic_error("Table: row width differs from header");
    rows.push_back(std::move(r));
  }
};

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) {
    if (c == '"') o += '"';
    o += c;
  }
  return o + "\"";
}

inline std::string to_csv(const Table& t) {
  std::string o;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) o += ',';
      o += csv_escape(r[i]);
    }
    o += '\n';
  };
  line(t.columns);
  for (const auto& r : t.rows) line(r);
  return o;
}

inline void write_csv(const fs::path& path, const Table& t) { write_atomic(path, to_csv(t)); }

// ---- JSONL and report summaries ----

inline std::string to_jsonl(const std::vector<json>& lines) {
  std::string o;
  for (const auto& j : lines) o += j.dump() + "\n";
  return o;
}

/// One line per trial.
inline std::vector<json> report_lines(const EstimateReport& r) {
  std::vector<json> out;
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    const auto& t = r.trials[i];
    out.push_back({{"id", r.id}, {"trial", i}, {"lhs", t.lhs}, {"rhs", t.rhs}, {"ratio", t.ratio()},
                   {"bound_side", r.bound_side}});
  }
  return out;
}

/// 95% interval for the fitted slope from the Student t quantile; nan without residual freedom.
inline std::pair<double, double> slope_ci95(double slope, double se, std::size_t points) {
  double nan = std::numeric_limits<double>::quiet_NaN();
  if (points < 3 || !std::isfinite(se) || !std::isfinite(slope)) return {nan, nan};
  boost::math::students_t dist(static_cast<double>(points - 2));
  double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  return {slope - q * se, slope + q * se};
}

inline Table report_summary(const std::vector<EstimateReport>& reps) {
  Table t{{"id", "bound_side", "ensemble", "constant", "slope", "slope_ci_lo", "slope_ci_hi", "r2", "note"}, {}};
  for (const auto& r : reps) {
    auto [lo, hi] = slope_ci95(r.slope, r.slope_se, r.fit_points);
    t.add(r.id, r.bound_side, r.ensemble(), r.constant, r.slope, lo, hi, r.r2, r.note);
  }
  return t;
}

inline Table refinement_table(const EstimateReport& r) {
  Table t{{"id", "parameter", "value", "constant"}, {}};
  for (const auto& p : r.refinement) t.add(r.id, p.parameter, p.value, p.constant);
  return t;
}

// ---- config hash ----

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Compact dump with sorted keys; independent of whitespace and key order in the source file.
inline std::string canonical(const json& j) { return j.dump(); }

inline std::uint64_t config_hash(const json& j) { return fnv1a64(canonical(j)); }

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---- snapshots ----
//
// Little-endian, 64-byte header then the coefficients:
//   0  char[8]  "DLSNAP01"
//   8  u32      n
//  12  u32      N
//  16  f64      L
//  24  u32      ncomp
//  28  u8       representation (0 physical, 1 Fourier)
//  29  u8       mean-zero flag
//  30  u16      reserved, 0
//  32  f64      time
//  40  i64      step
//  48  f64      initial charge (for resumed runs)
//  56  u64      config hash
//  64  f64[2 * ncomp * N^n]  (re, im) pairs, component-major, points row-major

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

inline constexpr char snapshot_magic[8] = {'D', 'L', 'S', 'N', 'A', 'P', '0', '1'};
inline constexpr std::size_t snapshot_header_bytes = 64;

struct Snapshot {
  Field field;
  double time = 0.0;
  std::int64_t step = 0;
  double charge0 = 0.0;
  std::uint64_t config_hash = 0;
};

namespace detail {
template <class T>
void put(std::string& b, std::size_t off, T v) {
  std::memcpy(b.data() + off, &v, sizeof v);
}
template <class T>
T get(const std::string& b, std::size_t off) {
  T v;
  std::memcpy(&v, b.data() + off, sizeof v);
  return v;
}
}  // namespace detail

inline std::string encode_snapshot(const Snapshot& s) {
  const Field& f = s.field;
  const Grid& g = f.grid();
  std::size_t payload = f.raw().size() * sizeof(cplx);
  std::string b(snapshot_header_bytes + payload, '\0');
  std::memcpy(b.data(), snapshot_magic, 8);
  detail::put<std::uint32_t>(b, 8, static_cast<std::uint32_t>(g.n));
  detail::put<std::uint32_t>(b, 12, static_cast<std::uint32_t>(g.N));
  detail::put<double>(b, 16, g.L);
  detail::put<std::uint32_t>(b, 24, static_cast<std::uint32_t>(f.ncomp()));
  detail::put<std::uint8_t>(b, 28, f.is_fourier() ? 1 : 0);
  detail::put<std::uint8_t>(b, 29, f.mean_zero() ? 1 : 0);
  detail::put<double>(b, 32, s.time);
  detail::put<std::int64_t>(b, 40, s.step);
  detail::put<double>(b, 48, s.charge0);
  detail::put<std::uint64_t>(b, 56, s.config_hash);
  std::memcpy(b.data() + snapshot_header_bytes, f.raw().data(), payload);
  return b;
}

inline Snapshot decode_snapshot(const std::string& b) {
  if (b.size() < snapshot_header_bytes || std::memcmp(b.data(), snapshot_magic, 8) != 0)
    throw std::runtime_error("snapshot: bad magic");
  int n = static_cast<int>(detail::get<std::uint32_t>(b, 8));
  int N = static_cast<int>(detail::get<std::uint32_t>(b, 12));
  double L = detail::get<double>(b, 16);
  int nc = static_cast<int>(detail::get<std::uint32_t>(b, 24));
  if (n < 1 || n > 3 || N < 2 || N > (1 << 16) || !(L > 0.0) || nc < 1 || nc > 8)
    throw std::runtime_error("snapshot: implausible header");
  Grid g(n, N, L);
  bool fourier = detail::get<std::uint8_t>(b, 28) != 0;
  Snapshot s{Field(g, nc, fourier), detail::get<double>(b, 32), detail::get<std::int64_t>(b, 40),
             detail::get<double>(b, 48), detail::get<std::uint64_t>(b, 56)};
  std::size_t payload = s.field.raw().size() * sizeof(cplx);
  if (b.size() != snapshot_header_bytes + payload) throw std::runtime_error("snapshot: payload size mismatch");
  std::memcpy(s.field.raw().data(), b.data() + snapshot_header_bytes, payload);
  s.field.set_mean_zero_flag(detail::get<std::uint8_t>(b, 29) != 0);
  return s;
}

inline void write_snapshot(const fs::path& path, const Snapshot& s) { write_atomic(path, encode_snapshot(s)); }

inline Snapshot read_snapshot(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return decode_snapshot(ss.str());
}

// ---- run manifest ----

struct CriterionVerdict {
  std::string id;
  Verdict verdict = Verdict::Fail;
  std::string detail;
};

inline std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  std::uint64_t config_hash = 0;
  std::string version = tool_version;
  std::string subcommand;
  std::string started, finished;
  json config;
  std::vector<std::string> outputs;
  std::vector<CriterionVerdict> criteria;

  int exit_code() const {
    std::vector<Verdict> v;
    for (const auto& c : criteria) v.push_back(c.verdict);
    return exit_status(v);
  }

  json to_json() const {
    json crit = json::array();
    for (const auto& c : criteria) crit.push_back({{"id", c.id}, {"verdict", to_string(c.verdict)}, {"detail", c.detail}});
    return {{"config_hash", hex64(config_hash)}, {"tool_version", version}, {"subcommand", subcommand},
            {"started", started}, {"finished", finished}, {"config", config}, {"outputs", outputs},
            {"criteria", crit}, {"exit_code", exit_code()}};
  }
};

inline void write_manifest(const fs::path& path, const RunManifest& m) { write_atomic(path, m.to_json().dump(2) + "\n"); }

/// Recomputes the hash of the embedded config and compares it with the recorded one.
inline bool check_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  json m = json::parse(is);
  return m.at("config_hash").get<std::string>() == hex64(config_hash(m.at("config")));
}

// ---- result tables (columns documented in the README) ----

inline Table table_of(const BoundednessSummary& b) {
  Table t{{"eps", "T", "sup_ratio", "charge_drift", "max_tail", "status", "ok", "N", "dt", "refined", "N_ref", "dt_ref",
           "sup_ratio_ref", "resolved", "threshold"},
          {}};
  for (const auto& r : b.rows)
    for (std::size_t j = 0; j < r.horizons.size(); ++j)
      t.add(r.eps, r.horizons[j], r.sup_ratio[j], r.charge_drift, r.max_tail, r.status, r.ok, r.N, r.dt, r.refined,
            r.N_ref, r.dt_ref, r.sup_ratio_ref, r.resolved, b.threshold);
  return t;
}

inline Table table_of(const std::vector<ScatterResult>& rs) {
  Table t{{"eps", "t", "e", "increment", "detected", "decay_slope", "v2_early_fraction"}, {}};
  for (const auto& s : rs)
    for (std::size_t j = 0; j < s.t.size(); ++j)
      t.add(s.eps, s.t[j], s.e[j], j == 0 ? std::numeric_limits<double>::quiet_NaN() : s.increments[j - 1], s.detected,
            s.decay.slope, s.v2_early_fraction);
  return t;
}

inline Table v2_profile_table(const std::vector<ScatterResult>& rs) {
  Table t{{"eps", "t", "v2_variation"}, {}};
  for (const auto& s : rs)
    for (std::size_t j = 0; j < s.v2_t.size(); ++j) t.add(s.eps, s.v2_t[j], s.v2_profile[j]);
  return t;
}

inline Table table_of(const LipschitzResult& l) {
  Table t{{"eps", "delta", "data_diff", "sup_diff", "ratio", "exact_zero", "spread", "delta_ref", "ratio_ref", "resolved"}, {}};
  for (const auto& r : l.rows)
    t.add(l.eps, r.delta, r.data_diff, r.sup_diff, r.ratio, r.exact_zero, l.spread, l.delta_ref, l.ratio_ref, l.resolved);
  return t;
}

inline Table table_of(const MassHorizonResult& m) {
  Table t{{"mass", "horizon", "crossed", "sup_ratio", "status", "T_max", "slope", "r2", "slope_ref", "resolved"}, {}};
  for (const auto& r : m.rows)
    t.add(r.mass, r.horizon, r.crossed, r.sup_ratio, r.status, m.T_max, m.fit.slope, m.fit.r2, m.slope_ref, m.resolved);
  return t;
}

inline Table table_of(const NullGainResult& g) {
  Table t{{"n", "T", "counter", "co", "counter_slope", "co_slope", "gap", "gap_ref", "resolved"}, {}};
  for (std::size_t j = 0; j < g.horizons.size(); ++j)
    t.add(g.n, g.horizons[j], g.counter[j], g.co[j], g.counter_fit.slope, g.co_fit.slope, g.gap, g.gap_ref, g.resolved);
  return t;
}

inline Table table_of(const XsbTrace& x) {
  Table t{{"lambda", "control", "d", "term", "d_min", "partial_sum", "rhs", "slope", "r2", "rhs_spread"}, {}};
  for (std::size_t j = 0; j < x.levels.size(); ++j) {
    double nan = std::numeric_limits<double>::quiet_NaN();
    bool has_partial = j < x.d_min.size();
    t.add(x.lambda, x.control, x.levels[j], x.terms[j], has_partial ? x.d_min[j] : nan, has_partial ? x.partial[j] : nan,
          has_partial ? x.rhs[j] : nan, x.fit.slope, x.fit.r2, x.rhs_spread);
  }
  return t;
}

inline Table table_of(const StrichartzResult& s) {
  Table t{{"lambda", "constant", "expected_exponent", "slope", "r2"}, {}};
  for (std::size_t j = 0; j < s.lambdas.size(); ++j) t.add(s.lambdas[j], s.constants[j], s.expected, s.fit.slope, s.fit.r2);
  return t;
}

inline Table table_of(const NullFrameSweep& s) {
  Table t{{"beta", "pw", "pw_error", "nf_star", "data_l2", "pw_slope", "star_slope"}, {}};
  for (std::size_t j = 0; j < s.betas.size(); ++j)
    t.add(s.betas[j], s.pw[j], s.pw_error[j], s.nf_star[j], s.data_l2[j], s.pw_fit.slope, s.star_fit.slope);
  return t;
}

}  // namespace diraclab::io

#endif  // DIRACLAB_IO_HPP
