#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "contagion.hpp"
#include "error.hpp"
#include "market.hpp"
#include "metrics.hpp"
#include "reconstruction.hpp"
#include "sweep.hpp"

namespace dsrank {

namespace csv {

/// Split one line on commas; double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                field += '"';
                ++k;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted)
        throw DataError("unterminated quoted field");
    fields.push_back(std::move(field));
    return fields;
}

inline std::string quote(const std::string &field) {
    if (field.find_first_of(",\"\n") == std::string::npos)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + '"';
}

inline double parse_number(const std::string &text, const char *column) {
    double value = 0.0;
    const char *begin = text.data();
    const char *end = text.data() + text.size();
    if (begin != end && *begin == '+')
        ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || text.empty() || !std::isfinite(value))
        throw DataError(std::string("bad number in column ") + column + ": \"" + text + "\"");
    return value;
}

inline void strip_cr(std::string &line) {
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
}

} // namespace csv

// ---------------------------------------------------------------------------
// Balance-sheet CSV

inline constexpr std::string_view kMarketHeader =
    "bank_id,name,year,interbank_assets,interbank_liabilities,equity,external_assets,external_liabilities";

struct MarketRow {
    int year;
    BalanceSheet sheet;
};

/// Parse every row of a balance-sheet CSV stream. `source` names it in errors.
inline std::vector<MarketRow> read_market_rows(std::istream &in, const std::string &source = "input") {
    std::string line;
    if (!std::getline(in, line))
        throw DataError(source + ": empty file");
    csv::strip_cr(line);
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
        line.erase(0, 3);
    if (line != kMarketHeader)
        throw DataError(source + ": line 1: header must be exactly \"" + std::string(kMarketHeader) + "\"");
    std::vector<MarketRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        csv::strip_cr(line);
        if (line.empty())
            continue;
        try {
            auto f = csv::split(line);
            if (f.size() != 8)
                throw DataError("expected 8 fields, found " + std::to_string(f.size()));
            MarketRow row;
            if (f[0].empty())
                throw DataError("empty bank_id");
            row.sheet.bank_id = f[0];
            row.sheet.name = f[1];
            const double year = csv::parse_number(f[2], "year");
            if (year != static_cast<double>(static_cast<int>(year)))
                throw DataError("year must be an integer");
            row.year = static_cast<int>(year);
            row.sheet.interbank_assets = csv::parse_number(f[3], "interbank_assets");
            row.sheet.interbank_liabilities = csv::parse_number(f[4], "interbank_liabilities");
            row.sheet.equity = csv::parse_number(f[5], "equity");
            if (!f[6].empty())
                row.sheet.external_assets = csv::parse_number(f[6], "external_assets");
            if (!f[7].empty())
                row.sheet.external_liabilities = csv::parse_number(f[7], "external_liabilities");
            if (row.sheet.interbank_assets < 0.0 || row.sheet.interbank_liabilities < 0.0)
                throw DataError("negative interbank position");
            rows.push_back(std::move(row));
        } catch (const DataError &e) {
            throw DataError(source + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

inline MarketSnapshot market_from_rows(const std::vector<MarketRow> &rows, int year, const std::string &source = "input") {
    std::vector<BalanceSheet> banks;
    std::set<std::string> seen;
    for (const auto &r : rows) {
        if (r.year != year)
            continue;
        if (!seen.insert(r.sheet.bank_id).second)
            throw DataError(source + ": duplicate bank_id \"" + r.sheet.bank_id + "\" in year " + std::to_string(year));
        banks.push_back(r.sheet);
    }
    if (banks.empty())
        throw DataError(source + ": no rows for year " + std::to_string(year));
    return MarketSnapshot(year, std::move(banks));
}

inline std::vector<int> market_years(const std::vector<MarketRow> &rows) {
    std::set<int> years;
    for (const auto &r : rows)
        years.insert(r.year);
    return {years.begin(), years.end()};
}

inline std::vector<MarketRow> read_market_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open " + path.string());
    return read_market_rows(in, path.string());
}

/// Load one year of a balance-sheet CSV; bank order follows the file.
inline MarketSnapshot load_market(const std::filesystem::path &path, int year) {
    return market_from_rows(read_market_file(path), year, path.string());
}

inline void write_market(std::ostream &out, const MarketSnapshot &snapshot, bool header = true) {
    if (header)
        out << kMarketHeader << '\n';
    for (const auto &b : snapshot.banks()) {
        out << csv::quote(b.bank_id) << ',' << csv::quote(b.name) << ',' << snapshot.year() << ','
            << format_double(b.interbank_assets) << ',' << format_double(b.interbank_liabilities) << ','
            << format_double(b.equity) << ',' << (b.external_assets ? format_double(*b.external_assets) : "") << ','
            << (b.external_liabilities ? format_double(*b.external_liabilities) : "") << '\n';
    }
}

inline void save_market(const std::filesystem::path &path, const std::vector<MarketSnapshot> &snapshots) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write " + path.string());
    out << kMarketHeader << '\n';
    for (const auto &s : snapshots)
        write_market(out, s, false);
}

// ---------------------------------------------------------------------------
// JSON views

inline nlohmann::ordered_json to_json(const ValidationReport &report) {
    nlohmann::ordered_json issues = nlohmann::ordered_json::array();
    for (const auto &i : report.issues)
        issues.push_back({{"bank_id", i.bank_id},
                          {"kind", to_string(i.kind)},
                          {"severity", to_string(i.severity)},
                          {"detail", i.detail}});
    return {{"issues", issues}, {"aggregate_gap", report.aggregate_gap}, {"admitted", report.admitted}};
}

inline nlohmann::ordered_json to_json(const Trajectory &traj, bool full = false) {
    nlohmann::ordered_json j;
    j["t_star"] = traj.t_star;
    j["reason"] = to_string(traj.reason);
    j["h_initial"] = traj.h_initial;
    j["h_final"] = traj.h_final;
    nlohmann::ordered_json first = nlohmann::ordered_json::array();
    for (int t : traj.first_distress)
        first.push_back(t == kNeverDistressed ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(t));
    j["first_distress"] = first;
    j["gamma"] = traj.gamma;
    j["liquidation"] = traj.liquidation;
    if (full)
        j["history"] = traj.history;
    return j;
}

// ---------------------------------------------------------------------------
// Exposure dumps

inline void write_exposures(std::ostream &out, const ExposureMatrix &m, const MarketSnapshot &snapshot) {
    out << "lender_id,borrower_id,amount\n";
    for (const auto &e : m.entries())
        out << csv::quote(snapshot.bank(e.lender).bank_id) << ',' << csv::quote(snapshot.bank(e.borrower).bank_id)
            << ',' << format_double(e.amount) << '\n';
}

inline ExposureMatrix read_exposures(std::istream &in, const MarketSnapshot &snapshot, const std::string &source = "input") {
    std::string line;
    if (!std::getline(in, line))
        throw DataError(source + ": empty file");
    csv::strip_cr(line);
    if (line != "lender_id,borrower_id,amount")
        throw DataError(source + ": line 1: bad exposure header");
    std::vector<Exposure> entries;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        csv::strip_cr(line);
        if (line.empty())
            continue;
        try {
            auto f = csv::split(line);
            if (f.size() != 3)
                throw DataError("expected 3 fields");
            auto i = snapshot.index_of(f[0]);
            auto j = snapshot.index_of(f[1]);
            if (!i || !j)
                throw DataError("unknown bank id");
            entries.push_back({static_cast<std::uint32_t>(*i), static_cast<std::uint32_t>(*j),
                               csv::parse_number(f[2], "amount")});
        } catch (const DataError &e) {
            throw DataError(source + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return ExposureMatrix(snapshot.size(), std::move(entries));
}

// ---------------------------------------------------------------------------
// Result tables

inline constexpr std::string_view kResultsHeader =
    "scenario,psi_or_bank,ds_mean,ds_std,gamma_max,t_star,year,rho,damping,samples,flagged";

inline void write_result_row(std::ostream &out, const std::string &scenario, const std::string &key,
                             const ScenarioSummary &s, int year, const ShockVariant &v) {
    out << scenario << ',' << csv::quote(key) << ',' << format_double(s.ds.mean) << ',' << format_double(s.ds.std)
        << ',' << format_double(s.gamma_max) << ',' << format_double(s.t_star) << ',' << year << ','
        << format_double(v.rho) << ',' << v.damping.label() << ',' << s.ds.count << ',' << s.flagged << '\n';
}

inline void write_group_results(std::ostream &out, const GroupSweepResult &r, int year, bool header = true) {
    if (header)
        out << kResultsHeader << '\n';
    const auto &grid = r.spec().psi_grid;
    for (std::size_t v = 0; v < r.variant_list().size(); ++v)
        for (std::size_t p = 0; p < grid.size(); ++p)
            write_result_row(out, "group", format_double(grid[p]), r.summary(v, p), year, r.variant_list()[v]);
}

inline void write_individual_results(std::ostream &out, const IndividualSweepResult &r, int year, bool header = true) {
    if (header)
        out << kResultsHeader << '\n';
    for (std::size_t v = 0; v < r.variants.size(); ++v)
        for (const auto &b : r.banks[v])
            write_result_row(out, "individual", b.bank_id, b.scenario, year, r.variants[v]);
}

inline constexpr std::string_view kDeltaHeader = "year,damping,rho,psi_star,ds_rho,ds_zero,delta_mean,delta_std,samples";

inline void write_deltas(std::ostream &out, const std::vector<DeltaSummary> &deltas, int year, bool header = true) {
    if (header)
        out << kDeltaHeader << '\n';
    for (const auto &d : deltas)
        out << year << ',' << d.damping.label() << ',' << format_double(d.rho) << ',' << format_double(d.psi_star)
            << ',' << format_double(d.ds_rho) << ',' << format_double(d.ds_zero) << ',' << format_double(d.delta.mean)
            << ',' << format_double(d.delta.std) << ',' << d.delta.count << '\n';
}

inline constexpr std::string_view kProfileHeader = "bank_id,impact,vulnerability,leverage,ext_leverage,nu";

inline void write_profiles(std::ostream &out, const std::vector<BankRiskProfile> &profiles) {
    out << kProfileHeader << '\n';
    for (const auto &p : profiles)
        out << csv::quote(p.bank_id) << ',' << format_double(p.impact) << ',' << format_double(p.vulnerability) << ','
            << format_double(p.leverage) << ',' << format_double(p.extended_leverage) << ',' << format_double(p.weight)
            << '\n';
}

inline std::vector<BankRiskProfile> read_profiles(std::istream &in, const std::string &source = "input") {
    std::string line;
    if (!std::getline(in, line))
        throw DataError(source + ": empty file");
    csv::strip_cr(line);
    if (line != kProfileHeader)
        throw DataError(source + ": line 1: bad profile header");
    std::vector<BankRiskProfile> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        csv::strip_cr(line);
        if (line.empty())
            continue;
        try {
            auto f = csv::split(line);
            if (f.size() != 6)
                throw DataError("expected 6 fields");
            out.push_back({f[0], csv::parse_number(f[1], "impact"), csv::parse_number(f[2], "vulnerability"),
                           csv::parse_number(f[3], "leverage"), csv::parse_number(f[4], "ext_leverage"),
                           csv::parse_number(f[5], "nu")});
        } catch (const DataError &e) {
            throw DataError(source + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

/// One parsed row of a results table.
struct ResultRow {
    std::string scenario;
    std::string key;
    double ds_mean = 0.0;
    double ds_std = 0.0;
    double gamma_max = 0.0;
    double t_star = 0.0;
    int year = 0;
    double rho = 0.0;
    std::string damping;
    std::size_t samples = 0;
    std::size_t flagged = 0;
};

inline std::vector<ResultRow> read_results(std::istream &in, const std::string &source = "input") {
    std::string line;
    if (!std::getline(in, line))
        throw DataError(source + ": empty file");
    csv::strip_cr(line);
    if (line != kResultsHeader)
        throw DataError(source + ": line 1: bad results header");
    std::vector<ResultRow> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        csv::strip_cr(line);
        if (line.empty())
            continue;
        try {
            auto f = csv::split(line);
            if (f.size() != 11)
                throw DataError("expected 11 fields");
            ResultRow r;
            r.scenario = f[0];
            r.key = f[1];
            r.ds_mean = csv::parse_number(f[2], "ds_mean");
            r.ds_std = csv::parse_number(f[3], "ds_std");
            r.gamma_max = csv::parse_number(f[4], "gamma_max");
            r.t_star = csv::parse_number(f[5], "t_star");
            r.year = static_cast<int>(csv::parse_number(f[6], "year"));
            r.rho = csv::parse_number(f[7], "rho");
            r.damping = f[8];
            r.samples = static_cast<std::size_t>(csv::parse_number(f[9], "samples"));
            r.flagged = static_cast<std::size_t>(csv::parse_number(f[10], "flagged"));
            out.push_back(std::move(r));
        } catch (const DataError &e) {
            throw DataError(source + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

inline void write_leverage(std::ostream &out, const LeverageSweepResult &r, const MarketSnapshot &snapshot) {
    out << "bank_id,leverage,ext_leverage,nu\n";
    for (std::size_t u = 0; u < r.bank_ids.size(); ++u)
        out << csv::quote(r.bank_ids[u]) << ',' << format_double(r.leverage[u]) << ','
            << format_double(r.extended_leverage[u]) << ',' << format_double(snapshot.weight(u)) << '\n';
}

inline void write_histograms(std::ostream &out, const LeverageSweepResult &r) {
    out << "series,bin_lo,bin_hi,count\n";
    auto emit = [&](const char *name, const Histogram &h) {
        if (h.zeros > 0)
            out << name << ",0,0," << h.zeros << '\n';
        for (std::size_t b = 0; b < h.counts.size(); ++b)
            out << name << ',' << format_double(h.edges[b]) << ',' << format_double(h.edges[b + 1]) << ','
                << h.counts[b] << '\n';
    };
    emit("leverage", r.leverage_histogram);
    emit("ext_leverage", r.extended_histogram);
}

} // namespace dsrank
