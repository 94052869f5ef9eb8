// SPDX-License-Identifier: MIT
//
// Return-series ingestion, flat key = value run configuration and CSV
// writers. Every written file starts with a stamp line
//   # svdnf <version> seed=<seed> config=<fnv1a-64 of the config text>
#pragma once

#include "svdnf/bench.hpp"
#include "svdnf/dnf.hpp"
#include "svdnf/errors.hpp"
#include "svdnf/grid.hpp"
#include "svdnf/model.hpp"
#include "svdnf/simulate.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace svdnf {

inline constexpr std::string_view kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Text helpers

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"') {
            if (quoted && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else {
                quoted = !quoted;
            }
        } else if (c == ',' && !quoted) {
            out.push_back(trim(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return x;
}

inline bool is_missing(const std::string& s) {
    const std::string l = lower(s);
    return l.empty() || l == "na" || l == "nan" || l == "null" || l == ".";
}

}  // namespace detail

/// Shortest round-tripping decimal form of a double.
[[nodiscard]] inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// 64-bit FNV-1a.
[[nodiscard]] inline std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

[[nodiscard]] inline std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

[[nodiscard]] inline std::string stamp_line(std::uint64_t seed, std::string_view config_text) {
    return "# svdnf " + std::string(kVersion) + " seed=" + std::to_string(seed) +
           " config=" + hex64(fnv1a(config_text));
}

// ---------------------------------------------------------------------------
// Return series

struct ReturnSeries {
    std::vector<double> y;
    std::vector<std::string> labels;  // empty or one per observation
    std::string source;

    [[nodiscard]] std::size_t size() const noexcept { return y.size(); }
};

enum class SeriesMode { Prices, Returns };

[[nodiscard]] inline SeriesMode parse_series_mode(std::string_view s) {
    const std::string l = detail::lower(std::string(s));
    if (l == "prices" || l == "price") return SeriesMode::Prices;
    if (l == "returns" || l == "return") return SeriesMode::Returns;
    throw DomainError("unknown series mode '" + std::string(s) + "' (expected prices|returns)");
}

/// Reads a CSV with a header row. `column` selects the value column (default:
/// the last one); `date_column` selects optional labels (default: a column
/// named "date" when present). Prices mode returns log price ratios.
[[nodiscard]] inline ReturnSeries load_returns(std::istream& in, SeriesMode mode,
                                               const std::string& column = "",
                                               const std::string& date_column = "",
                                               const std::string& source = "<stream>") {
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        header = detail::split_csv(t);
        break;
    }
    if (header.empty()) throw DataError(source + ": missing header row");

    auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (detail::lower(header[i]) == detail::lower(name)) return i;
        return std::nullopt;
    };
    std::size_t vcol = header.size() - 1;
    if (!column.empty()) {
        const auto c = find_col(column);
        if (!c) throw DataError(source + ": no column named '" + column + "'");
        vcol = *c;
    }
    std::optional<std::size_t> dcol;
    if (!date_column.empty()) {
        dcol = find_col(date_column);
        if (!dcol) throw DataError(source + ": no column named '" + date_column + "'");
    } else {
        dcol = find_col("date");
    }
    if (dcol && *dcol == vcol) dcol.reset();

    std::vector<double> values;
    std::vector<std::string> labels;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cells = detail::split_csv(t);
        if (cells.size() != header.size())
            throw DataError(source + ": line " + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " cells, found " +
                            std::to_string(cells.size()));
        if (detail::is_missing(cells[vcol]))
            throw DataError(source + ": line " + std::to_string(lineno) + ": missing value in column '" +
                            header[vcol] + "'");
        const auto x = detail::parse_double(cells[vcol]);
        if (!x || !std::isfinite(*x))
            throw DataError(source + ": line " + std::to_string(lineno) + ": bad number '" +
                            cells[vcol] + "'");
        if (mode == SeriesMode::Prices && !(*x > 0.0))
            throw DataError(source + ": line " + std::to_string(lineno) + ": price must be > 0");
        values.push_back(*x);
        if (dcol) {
            if (detail::is_missing(cells[*dcol]))
                throw DataError(source + ": line " + std::to_string(lineno) +
                                ": missing value in column '" + header[*dcol] + "'");
            labels.push_back(cells[*dcol]);
        }
    }

    ReturnSeries rs;
    rs.source = source;
    if (mode == SeriesMode::Returns) {
        rs.y = std::move(values);
        rs.labels = std::move(labels);
    } else {
        if (values.size() < 2) throw DataError(source + ": prices mode needs at least 2 rows");
        rs.y.resize(values.size() - 1);
        for (std::size_t i = 1; i < values.size(); ++i) rs.y[i - 1] = std::log(values[i] / values[i - 1]);
        if (!labels.empty()) rs.labels.assign(labels.begin() + 1, labels.end());
    }
    if (rs.y.empty()) throw DataError(source + ": empty series");
    return rs;
}

[[nodiscard]] inline ReturnSeries load_returns(const std::string& path, SeriesMode mode,
                                               const std::string& column = "",
                                               const std::string& date_column = "") {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return load_returns(in, mode, column, date_column, path);
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
    ModelVariant variant = ModelVariant::SV;
    GridSpec grid = GridSpec::for_variant(ModelVariant::SV);
    std::size_t particles = 0;  // 0: variant default
    std::uint64_t seed = 42;
    double h = 1.0 / 252.0;
    std::string data;
    std::string data_mode = "returns";
    std::string column;
    std::string date_column;
    std::string out = ".";
    std::array<std::optional<double>, kParamCount> params{};
    std::map<std::string, std::string> options;  // command-specific keys

    /// Parameter values: explicit entries over `fallback`.
    [[nodiscard]] ParamValues param_values(ParamValues fallback) const {
        for (std::size_t i = 0; i < kParamCount; ++i)
            if (params[i]) fallback[static_cast<Param>(i)] = *params[i];
        fallback.h = h;
        return fallback;
    }

    [[nodiscard]] std::size_t particle_count() const {
        return particles > 0 ? particles : default_particles(variant);
    }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

inline std::string unquote(const std::string& raw, std::size_t lineno) {
    if (raw.size() >= 2 && raw.front() == '"') {
        if (raw.back() != '"')
            throw DataError("config line " + std::to_string(lineno) + ": unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
            if (raw[i] == '\\' && i + 2 < raw.size()) ++i;
            out += raw[i];
        }
        return out;
    }
    return raw;
}

/// Strips a trailing comment that is not inside a quoted string.
inline std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && quoted) {
            ++i;
            continue;
        }
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

}  // namespace detail

[[nodiscard]] inline std::string write_config(const RunConfig& c) {
    std::ostringstream os;
    os << "variant = " << detail::quote(std::string(to_string(c.variant))) << "\n";
    os << "seed = " << c.seed << "\n";
    os << "h = " << format_double(c.h) << "\n";
    os << "particles = " << c.particles << "\n";
    os << "grid.N = " << c.grid.N << "\n";
    os << "grid.M = " << c.grid.M << "\n";
    os << "grid.K = " << c.grid.K << "\n";
    os << "grid.R = " << c.grid.R << "\n";
    os << "grid.floor_eps = " << format_double(c.grid.floor_eps) << "\n";
    os << "data = " << detail::quote(c.data) << "\n";
    os << "data_mode = " << detail::quote(c.data_mode) << "\n";
    os << "column = " << detail::quote(c.column) << "\n";
    os << "date_column = " << detail::quote(c.date_column) << "\n";
    os << "out = " << detail::quote(c.out) << "\n";
    for (std::size_t i = 0; i < kParamCount; ++i)
        if (c.params[i]) os << "params." << kParamNames[i] << " = " << format_double(*c.params[i]) << "\n";
    for (const auto& [k, v] : c.options) os << k << " = " << detail::quote(v) << "\n";
    return os.str();
}

/// Parses flat `key = value` text. Grid sizes not given fall back to the
/// variant defaults for the given N. Unknown keys land in `options`.
[[nodiscard]] inline RunConfig parse_config(std::istream& in, const std::string& source = "<config>") {
    std::map<std::string, std::pair<std::string, std::size_t>> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(detail::strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            throw DataError(source + ": line " + std::to_string(lineno) +
                            ": tables are not supported, use dotted keys");
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw DataError(source + ": line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        if (key.empty()) throw DataError(source + ": line " + std::to_string(lineno) + ": empty key");
        kv[key] = {detail::unquote(detail::trim(t.substr(eq + 1)), lineno), lineno};
    }

    auto take = [&](const std::string& key) -> std::optional<std::pair<std::string, std::size_t>> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        auto v = it->second;
        kv.erase(it);
        return v;
    };
    auto bad = [&](std::size_t ln, const std::string& msg) {
        return DataError(source + ": line " + std::to_string(ln) + ": " + msg);
    };
    auto as_double = [&](const std::pair<std::string, std::size_t>& v) {
        const auto x = detail::parse_double(v.first);
        if (!x) throw bad(v.second, "expected a number, got '" + v.first + "'");
        return *x;
    };
    auto as_uint = [&](const std::pair<std::string, std::size_t>& v) -> std::uint64_t {
        if (v.first.empty() || v.first.find_first_not_of("0123456789") != std::string::npos)
            throw bad(v.second, "expected a nonnegative integer, got '" + v.first + "'");
        return std::stoull(v.first);
    };

    RunConfig c;
    if (auto v = take("variant")) {
        try {
            c.variant = parse_variant(v->first);
        } catch (const DomainError& e) {
            throw bad(v->second, e.what());
        }
    }
    std::size_t n = 50;
    if (auto v = take("grid.N")) n = as_uint(*v);
    c.grid = GridSpec::for_variant(c.variant, n);
    if (auto v = take("grid.M")) c.grid.M = as_uint(*v);
    if (auto v = take("grid.K")) c.grid.K = as_uint(*v);
    if (auto v = take("grid.R")) c.grid.R = as_uint(*v);
    if (auto v = take("grid.floor_eps")) c.grid.floor_eps = as_double(*v);
    if (auto v = take("seed")) c.seed = as_uint(*v);
    if (auto v = take("h")) c.h = as_double(*v);
    if (auto v = take("particles")) c.particles = as_uint(*v);
    if (auto v = take("data")) c.data = v->first;
    if (auto v = take("data_mode")) c.data_mode = v->first;
    if (auto v = take("column")) c.column = v->first;
    if (auto v = take("date_column")) c.date_column = v->first;
    if (auto v = take("out")) c.out = v->first;
    for (std::size_t i = 0; i < kParamCount; ++i)
        if (auto v = take("params." + std::string(kParamNames[i]))) c.params[i] = as_double(*v);
    for (auto& [k, v] : kv) {
        if (k.rfind("params.", 0) == 0) throw bad(v.second, "unknown parameter key '" + k + "'");
        c.options[k] = v.first;
    }

    if (!(c.h > 0.0)) throw DataError(source + ": h must be > 0");
    if (c.grid.N < 2) throw DataError(source + ": grid.N must be >= 2");
    if (c.grid.M < 1) throw DataError(source + ": grid.M must be >= 1");
    if (!(c.grid.floor_eps > 0.0)) throw DataError(source + ": grid.floor_eps must be > 0");
    (void)parse_series_mode(c.data_mode);
    return c;
}

/// Reads a config file; referenced data files must exist.
[[nodiscard]] inline RunConfig read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config '" + path + "'");
    RunConfig c = parse_config(in, path);
    if (!c.data.empty()) {
        std::filesystem::path p(c.data);
        if (p.is_relative()) p = std::filesystem::path(path).parent_path() / p;
        if (!std::filesystem::exists(p)) throw DataError(path + ": data file '" + c.data + "' not found");
        c.data = p.string();
    }
    return c;
}

// ---------------------------------------------------------------------------
// CSV writers

inline void write_path_csv(std::ostream& os, const SimulatedPath& p, const std::string& stamp) {
    os << stamp << "\n";
    os << "t,return,variance,intensity,jumps,jump_return,jump_variance\n";
    for (std::size_t t = 0; t < p.returns.size(); ++t) {
        os << (t + 1) << ',' << format_double(p.returns[t]) << ',' << format_double(p.variances[t + 1])
           << ',' << format_double(p.intensities[t + 1]) << ',' << p.jump_counts[t] << ','
           << format_double(p.jump_returns[t]) << ',' << format_double(p.jump_variances[t]) << "\n";
    }
}

inline void write_filter_csv(std::ostream& os, const FilterOutput& f, const ReturnSeries& y,
                             double h, const std::string& stamp) {
    os << stamp << "\n";
    os << "t,label,y,loglik_contrib,filtered_v,filtered_vol,filtered_lambda,jump_prob,"
          "jump_return,jump_variance\n";
    for (std::size_t t = 0; t < f.loglik_contribs.size(); ++t) {
        os << (t + 1) << ',' << (y.labels.empty() ? "" : y.labels[t]) << ',' << format_double(y.y[t])
           << ',' << format_double(f.loglik_contribs[t]) << ',' << format_double(f.filtered_v[t]) << ','
           << format_double(std::sqrt(f.filtered_v[t] * h)) << ',' << format_double(f.filtered_lambda[t])
           << ',' << format_double(f.filtered_jump_prob[t]) << ','
           << format_double(f.filtered_jump_return[t]) << ','
           << format_double(f.filtered_jump_variance[t]) << "\n";
    }
}

inline void write_ape_csv(std::ostream& os, const ApeReport& r, const std::string& stamp) {
    os << stamp << "\n";
    os << "trial,seed,series_len,loglik_dnf,loglik_ref,ape";
    for (std::string_view n : kParamNames) os << ',' << n;
    os << "\n";
    for (std::size_t i = 0; i < r.trials.size(); ++i) {
        const ApeTrial& t = r.trials[i];
        os << i << ',' << t.seed << ',' << t.series_len << ',' << format_double(t.loglik_dnf) << ','
           << format_double(t.loglik_ref) << ',' << format_double(t.ape);
        for (std::size_t k = 0; k < kParamCount; ++k) os << ',' << format_double(t.params[static_cast<Param>(k)]);
        os << "\n";
    }
}

inline void write_sweep_csv(std::ostream& os, const SweepReport& r, const std::string& stamp) {
    os << stamp << "\n";
    os << "N,mape,seconds\n";
    for (const SweepPoint& p : r.points)
        os << p.N << ',' << format_double(p.mape) << ',' << format_double(p.seconds) << "\n";
}

/// One row per (budget, replication) of the particle filter runs.
inline void write_sir_box_csv(std::ostream& os, const SweepReport& r, const std::string& stamp) {
    os << stamp << "\n";
    os << "particles,rep,ape,seconds\n";
    for (const SirBudgetPoint& b : r.sir)
        for (std::size_t i = 0; i < b.apes.size(); ++i)
            os << b.particles << ',' << i << ',' << format_double(b.apes[i]) << ','
               << format_double(b.times[i]) << "\n";
}

inline void write_bias_csv(std::ostream& os, const BiasReport& r, const std::string& stamp) {
    os << stamp << "\n";
    os << "param,true,mean,bias,rmse\n";
    for (const BiasRow& row : r.rows)
        os << param_name(row.param) << ',' << format_double(row.true_value) << ','
           << format_double(row.mean) << ',' << format_double(row.bias) << ','
           << format_double(row.rmse) << "\n";
}

}  // namespace svdnf
