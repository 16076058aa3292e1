#include "fincon/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fincon/csv.hpp"
#include "fincon/errors.hpp"

namespace fincon {

namespace {

constexpr double kRowValidityPct = 95.0;

double parse_price(const std::string& cell, long line_no) {
    double v;
    try {
        v = parse_cell(cell);
    } catch (const MalformedRow&) {
        throw MalformedRow("line " + std::to_string(line_no) + ": bad price '" + cell + "'");
    }
    if (std::isnan(v))
        throw MalformedRow("line " + std::to_string(line_no) + ": missing price");
    if (v <= 0.0)
        throw NonPositivePrice("line " + std::to_string(line_no) + ": price " +
                               format_double(v) + " must be positive");
    return v;
}

}  // namespace

std::string to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::RAW_PRICE: return "RAW_PRICE";
        case FeatureKind::VWAP: return "VWAP";
        case FeatureKind::LOGRET: return "LOGRET";
        case FeatureKind::RAW_LOGRET: return "RAW_LOGRET";
    }
    return "RAW_PRICE";
}

FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "RAW_PRICE") return FeatureKind::RAW_PRICE;
    if (s == "VWAP") return FeatureKind::VWAP;
    if (s == "LOGRET") return FeatureKind::LOGRET;
    if (s == "RAW_LOGRET") return FeatureKind::RAW_LOGRET;
    throw ConfigError("unknown feature kind '" + s + "'");
}

std::vector<DailyBar> parse_bars(const std::vector<std::string>& lines,
                                 const std::string& origin) {
    if (lines.empty())
        throw EmptyInput("empty bar tape: " + origin);
    const auto header = split_csv_line(lines[0]);
    const std::vector<std::string> want = {"date", "ticker", "adj_close", "close", "volume"};
    if (header != want)
        throw MalformedRow(origin + ": expected header date,ticker,adj_close,close,volume");

    std::vector<DailyBar> bars;
    std::set<std::pair<Date, std::string>> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const long line_no = static_cast<long>(i) + 1;
        if (lines[i].empty()) continue;
        auto cells = split_csv_line(lines[i]);
        if (cells.size() != 5)
            throw MalformedRow("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                               std::to_string(cells.size()));
        DailyBar bar;
        try {
            bar.date = parse_date(cells[0]);
        } catch (const MalformedRow& e) {
            throw MalformedRow("line " + std::to_string(line_no) + ": " + e.what());
        }
        bar.ticker = cells[1];
        if (bar.ticker.empty())
            throw MalformedRow("line " + std::to_string(line_no) + ": empty ticker");
        bar.adj_close = parse_price(cells[2], line_no);
        bar.close = parse_price(cells[3], line_no);
        double vol;
        try {
            vol = parse_cell(cells[4]);
        } catch (const MalformedRow&) {
            throw MalformedRow("line " + std::to_string(line_no) + ": bad volume '" + cells[4] + "'");
        }
        if (std::isnan(vol) || vol < 0.0)
            throw MalformedRow("line " + std::to_string(line_no) + ": volume must be >= 0");
        bar.volume = vol;
        if (!seen.insert({bar.date, bar.ticker}).second)
            throw DuplicateKey("duplicate bar for " + to_string(bar.date) + "," + bar.ticker);
        bars.push_back(std::move(bar));
    }
    std::sort(bars.begin(), bars.end(), [](const DailyBar& a, const DailyBar& b) {
        return std::tie(a.date, a.ticker) < std::tie(b.date, b.ticker);
    });
    return bars;
}

std::vector<DailyBar> load_bars(const std::filesystem::path& path) {
    return parse_bars(read_lines(path), path.string());
}

PivotResult pivot_bars(const std::vector<DailyBar>& bars) {
    if (bars.empty()) throw EmptyInput("no bars to pivot");
    std::set<Date> dates;
    std::set<std::string> tickers;
    for (const auto& b : bars) {
        dates.insert(b.date);
        tickers.insert(b.ticker);
    }
    PivotResult out;
    out.adj_close.dates.assign(dates.begin(), dates.end());
    out.adj_close.assets.assign(tickers.begin(), tickers.end());
    const auto T = static_cast<Eigen::Index>(dates.size());
    const auto K = static_cast<Eigen::Index>(tickers.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.adj_close.values = Eigen::MatrixXd::Constant(T, K, nan);
    out.adj_close.kind = FeatureKind::RAW_PRICE;
    out.volume = out.adj_close;

    std::map<Date, Eigen::Index> date_ix;
    std::map<std::string, Eigen::Index> tick_ix;
    for (Eigen::Index i = 0; i < T; ++i) date_ix[out.adj_close.dates[i]] = i;
    for (Eigen::Index j = 0; j < K; ++j) tick_ix[out.adj_close.assets[j]] = j;
    for (const auto& b : bars) {
        const auto i = date_ix[b.date];
        const auto j = tick_ix[b.ticker];
        out.adj_close.values(i, j) = b.adj_close;
        out.volume.values(i, j) = b.volume;
    }
    return out;
}

std::vector<double> vwap_series(const std::vector<double>& prices,
                                const std::vector<double>& volumes, int w) {
    if (prices.size() != volumes.size())
        throw LengthMismatch("vwap: prices and volumes differ in length");
    const auto T = static_cast<long>(prices.size());
    if (w < 1 || w > T)
        throw Precondition("vwap: window must satisfy 1 <= w <= T");
    std::vector<double> out(T - w + 1);
    for (long t = 0; t + w <= T; ++t) {
        double pv = 0.0, v = 0.0;
        for (long s = t; s < t + w; ++s) {
            pv += prices[s] * volumes[s];
            v += volumes[s];
        }
        if (v == 0.0)
            throw ZeroVolumeWindow("vwap: window starting at " + std::to_string(t) +
                                   " has zero total volume");
        out[t] = pv / v;
    }
    return out;
}

std::vector<double> logret_series(const std::vector<double>& prices, int w) {
    const auto T = static_cast<long>(prices.size());
    if (w < 1 || w >= T)
        throw Precondition("logret: window must satisfy 1 <= w <= T-1");
    for (double p : prices)
        if (!(p > 0.0))
            throw NonPositivePrice("logret: all prices must be positive");
    std::vector<double> r(T - 1);
    for (long s = 1; s < T; ++s) r[s - 1] = std::log(prices[s] / prices[s - 1]);
    std::vector<double> out(T - w);
    for (long t = 0; t + w <= T - 1; ++t) {
        double acc = 0.0;
        for (long s = t; s < t + w; ++s) acc += r[s];
        out[t] = acc / w;
    }
    return out;
}

AssetPanel clean_panel(const AssetPanel& raw) {
    const auto T = raw.values.rows();
    const auto K = raw.values.cols();
    if (T == 0 || K == 0) throw EmptyInput("clean_panel: empty panel");

    // A date survives when at least 95% of its entries are present.  The
    // comparison is done in integers so the boundary (exactly 95%) is exact.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < T; ++i) {
        long valid = 0;
        for (Eigen::Index j = 0; j < K; ++j)
            if (!std::isnan(raw.values(i, j))) ++valid;
        if (static_cast<double>(valid) * 100.0 >= kRowValidityPct * static_cast<double>(K))
            keep.push_back(i);
    }
    if (keep.empty()) throw EmptyInput("clean_panel: every row fell below the validity cutoff");

    AssetPanel out;
    out.assets = raw.assets;
    out.kind = raw.kind;
    out.window = raw.window;
    out.dates.reserve(keep.size());
    out.values.resize(static_cast<Eigen::Index>(keep.size()), K);
    for (std::size_t r = 0; r < keep.size(); ++r) {
        out.dates.push_back(raw.dates[keep[r]]);
        out.values.row(static_cast<Eigen::Index>(r)) = raw.values.row(keep[r]);
    }

    for (Eigen::Index j = 0; j < K; ++j) {
        if (std::isnan(out.values(0, j)))
            throw UnfillableColumn("column '" + out.assets[j] +
                                   "' starts with a gap after row filtering");
        for (Eigen::Index i = 1; i < out.values.rows(); ++i)
            if (std::isnan(out.values(i, j))) out.values(i, j) = out.values(i - 1, j);
    }
    return out;
}

AssetPanel build_feature_panel(const AssetPanel& adj_close, const AssetPanel& volume,
                               FeatureKind kind, int w) {
    const auto T = adj_close.values.rows();
    const auto K = adj_close.values.cols();
    if (kind == FeatureKind::VWAP &&
        (volume.values.rows() != T || volume.values.cols() != K))
        throw DimensionMismatch("feature panel: price and volume shapes differ");
    if (kind == FeatureKind::RAW_LOGRET) w = 1;
    if (kind == FeatureKind::RAW_PRICE)
        throw Precondition("feature panel: RAW_PRICE is not a derived feature");

    const long out_rows = (kind == FeatureKind::VWAP) ? T - w + 1 : T - w;
    if (out_rows < 1)
        throw Precondition("feature panel: window too long for panel length");

    AssetPanel out;
    out.assets = adj_close.assets;
    out.kind = kind;
    out.window = w;
    out.values.resize(out_rows, K);
    // First output row consumes the first w prices (VWAP) or w returns
    // (LOGRET); either way the stamp is the date the window closes on.
    const long date_off = (kind == FeatureKind::VWAP) ? w - 1 : w;
    out.dates.assign(adj_close.dates.begin() + date_off, adj_close.dates.end());

#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < K; ++j) {
        std::vector<double> p(T), v(T);
        for (Eigen::Index i = 0; i < T; ++i) {
            p[i] = adj_close.values(i, j);
            if (kind == FeatureKind::VWAP) v[i] = volume.values(i, j);
        }
        std::vector<double> col = (kind == FeatureKind::VWAP)
                                      ? vwap_series(p, v, w)
                                      : logret_series(p, w);
        for (long i = 0; i < out_rows; ++i) out.values(i, j) = col[i];
    }
    return out;
}

std::vector<EraPanel> segment_eras(const AssetPanel& panel,
                                   const std::vector<EraSpec>& eras) {
    std::vector<EraPanel> out;
    for (const auto& era : eras) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < panel.values.rows(); ++i)
            if (panel.dates[i] >= era.start && panel.dates[i] <= era.end) rows.push_back(i);
        if (rows.empty())
            throw EmptyEra("era '" + era.label + "' (" + to_string(era.start) + " .. " +
                           to_string(era.end) + ") contains no panel rows");
        EraPanel ep;
        ep.label = era.label;
        ep.panel.assets = panel.assets;
        ep.panel.kind = panel.kind;
        ep.panel.window = panel.window;
        ep.panel.values.resize(static_cast<Eigen::Index>(rows.size()), panel.values.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            ep.panel.dates.push_back(panel.dates[rows[r]]);
            ep.panel.values.row(static_cast<Eigen::Index>(r)) = panel.values.row(rows[r]);
        }
        out.push_back(std::move(ep));
    }
    return out;
}

std::vector<EraSpec> default_eras() {
    return {
        {"S1", {2005, 1, 1}, {2009, 12, 31}},
        {"S2", {2010, 1, 1}, {2014, 12, 31}},
        {"S3", {2015, 1, 1}, {2019, 12, 31}},
        {"S4", {2020, 1, 1}, {2021, 12, 31}},
        {"S5", {2022, 1, 1}, {2025, 12, 31}},
    };
}

std::vector<EraSpec> parse_eras(const std::string& text) {
    // label:start:end,label:start:end,...
    std::vector<EraSpec> out;
    std::string cur;
    std::vector<std::string> items;
    for (char c : text) {
        if (c == ',') {
            items.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    items.push_back(cur);
    for (const auto& item : items) {
        if (item.empty()) continue;
        auto a = item.find(':');
        auto b = item.rfind(':');
        if (a == std::string::npos || b == a)
            throw ConfigError("era spec must be label:start:end, got '" + item + "'");
        EraSpec era;
        era.label = item.substr(0, a);
        era.start = parse_date(item.substr(a + 1, b - a - 1));
        era.end = parse_date(item.substr(b + 1));
        if (era.end < era.start)
            throw ConfigError("era '" + era.label + "' ends before it starts");
        out.push_back(std::move(era));
    }
    if (out.empty()) throw ConfigError("no eras in '" + text + "'");
    return out;
}

void write_panel_csv(const std::filesystem::path& path, const AssetPanel& panel) {
    std::vector<std::string> lines;
    std::string header = "date";
    for (const auto& a : panel.assets) header += "," + a;
    lines.push_back(header);
    for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
        std::string row = to_string(panel.dates[i]);
        for (Eigen::Index j = 0; j < panel.values.cols(); ++j)
            row += "," + format_cell(panel.values(i, j));
        lines.push_back(std::move(row));
    }
    write_lines(path, lines);

    auto meta = path;
    meta.replace_extension(".meta");
    write_kv(meta, {
                       {"feature_kind", to_string(panel.kind)},
                       {"window", std::to_string(panel.window)},
                       {"n_dates", std::to_string(panel.values.rows())},
                       {"n_assets", std::to_string(panel.values.cols())},
                   });
}

AssetPanel read_panel_csv(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty()) throw EmptyInput("empty panel file " + path.string());
    auto header = split_csv_line(lines[0]);
    if (header.empty() || header[0] != "date")
        throw MalformedRow("panel header must start with 'date' in " + path.string());

    AssetPanel panel;
    panel.assets.assign(header.begin() + 1, header.end());
    const auto K = static_cast<Eigen::Index>(panel.assets.size());
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto cells = split_csv_line(lines[i]);
        if (static_cast<Eigen::Index>(cells.size()) != K + 1)
            throw MalformedRow("panel row " + std::to_string(i + 1) + " has wrong arity in " +
                               path.string());
        panel.dates.push_back(parse_date(cells[0]));
        std::vector<double> row(K);
        for (Eigen::Index j = 0; j < K; ++j) row[j] = parse_cell(cells[j + 1]);
        rows.push_back(std::move(row));
    }
    panel.values.resize(static_cast<Eigen::Index>(rows.size()), K);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (Eigen::Index j = 0; j < K; ++j)
            panel.values(static_cast<Eigen::Index>(i), j) = rows[i][j];

    auto meta = path;
    meta.replace_extension(".meta");
    if (std::filesystem::exists(meta)) {
        for (const auto& [k, v] : read_kv(meta)) {
            if (k == "feature_kind") panel.kind = feature_kind_from_string(v);
            if (k == "window") panel.window = std::stoi(v);
        }
    }
    return panel;
}

}  // namespace fincon
