#include "fincon/factors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fincon/csv.hpp"
#include "fincon/errors.hpp"
#include "fincon/stats.hpp"

namespace fincon {

std::vector<double> project_returns(const AssetPanel& returns, const Eigen::VectorXd& w) {
    if (returns.values.cols() != w.size())
        throw DimensionMismatch("project_returns: loading length " +
                                std::to_string(w.size()) + " vs " +
                                std::to_string(returns.values.cols()) + " assets");
    std::vector<double> z(returns.values.rows());
    for (Eigen::Index t = 0; t < returns.values.rows(); ++t)
        z[t] = returns.values.row(t).dot(w);
    return z;
}

std::vector<double> factor_index(const std::vector<double>& z, double base) {
    std::vector<double> idx(z.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < z.size(); ++t) {
        acc += z[t];
        if (std::abs(acc) > 700.0)
            throw OverflowGuard("factor_index: cumulative log return " +
                                format_double(acc) + " at step " + std::to_string(t) +
                                " would overflow exp");
        idx[t] = base * std::exp(acc);
    }
    return idx;
}

std::vector<double> rolling_pearson(const std::vector<double>& x,
                                    const std::vector<double>& y, int window) {
    if (x.size() != y.size())
        throw LengthMismatch("rolling_pearson: series lengths differ");
    if (window < 2) throw Precondition("rolling_pearson: window must be >= 2");
    const long T = static_cast<long>(x.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> out(T, nan);
    if (T < window) return out;
    // Each window is recomputed from scratch: slower than a running update
    // but immune to drift, and every slot is independent.
#pragma omp parallel for schedule(static)
    for (long t = window - 1; t < T; ++t) {
        Eigen::Map<const Eigen::VectorXd> wx(x.data() + t - window + 1, window);
        Eigen::Map<const Eigen::VectorXd> wy(y.data() + t - window + 1, window);
        out[t] = pearson(wx, wy);  // NaN when a side is constant
    }
    return out;
}

double risk_shift_amplitude(const std::vector<double>& rho) {
    std::vector<double> defined;
    for (double v : rho)
        if (!std::isnan(v)) defined.push_back(v);
    if (defined.size() < 4)
        throw InsufficientData("risk_shift_amplitude: need >= 4 defined points, have " +
                               std::to_string(defined.size()));
    return iqr(defined);
}

FactorEngineResult run_factor_engine(const AssetPanel& daily_returns,
                                     const Eigen::VectorXd& w_on,
                                     const Eigen::VectorXd& w_off, int rho_window) {
    FactorEngineResult out;
    out.series.dates = daily_returns.dates;
    out.series.z_on = project_returns(daily_returns, w_on);
    out.series.z_off = project_returns(daily_returns, w_off);
    out.series.idx_on = factor_index(out.series.z_on);
    out.series.idx_off = factor_index(out.series.z_off);
    out.shift.dates = daily_returns.dates;
    out.shift.window = rho_window;
    out.shift.rho = rolling_pearson(out.series.z_on, out.series.z_off, rho_window);
    out.amplitude = risk_shift_amplitude(out.shift.rho);
    return out;
}

MatchResult structural_overlap(const ComponentMap& stock_map, const ComponentMap& etf_map,
                               const Eigen::MatrixXd& holdings) {
    const auto n_stocks = stock_map.loadings.cols();
    const auto n_etfs = etf_map.loadings.cols();
    if (holdings.rows() != n_stocks || holdings.cols() != n_etfs)
        throw DimensionMismatch("structural_overlap: holdings must be stocks x etfs");
    ComponentMap projected = etf_map;
    projected.asset_order = stock_map.asset_order;
    projected.loadings = (holdings * etf_map.loadings.transpose()).transpose();
    return match_components(stock_map, projected);
}

SynchronyResult temporal_synchrony(const FactorSeries& a, const FactorSeries& b) {
    std::vector<double> aon, aoff, bon, boff;
    std::size_t i = 0, j = 0;
    while (i < a.dates.size() && j < b.dates.size()) {
        if (a.dates[i] < b.dates[j]) {
            ++i;
        } else if (b.dates[j] < a.dates[i]) {
            ++j;
        } else {
            aon.push_back(a.z_on[i]);
            aoff.push_back(a.z_off[i]);
            bon.push_back(b.z_on[j]);
            boff.push_back(b.z_off[j]);
            ++i;
            ++j;
        }
    }
    SynchronyResult out;
    out.n_common = static_cast<int>(aon.size());
    if (out.n_common < 30)
        throw InsufficientOverlap("temporal_synchrony: " + std::to_string(out.n_common) +
                                  " common dates, need >= 30");
    const auto mapv = [](const std::vector<double>& v) {
        return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    };
    out.corr_on = pearson(mapv(aon), mapv(bon));
    out.corr_off = pearson(mapv(aoff), mapv(boff));
    return out;
}

void write_factor_csv(const std::filesystem::path& path, const FactorSeries& s) {
    std::vector<std::string> lines = {"date,z_on,z_off,idx_on,idx_off"};
    for (std::size_t t = 0; t < s.dates.size(); ++t)
        lines.push_back(to_string(s.dates[t]) + "," + format_cell(s.z_on[t]) + "," +
                        format_cell(s.z_off[t]) + "," + format_cell(s.idx_on[t]) + "," +
                        format_cell(s.idx_off[t]));
    write_lines(path, lines);
}

FactorSeries read_factor_csv(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "date,z_on,z_off,idx_on,idx_off")
        throw MalformedRow("bad factor CSV header in " + path.string());
    FactorSeries s;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto cells = split_csv_line(lines[i]);
        if (cells.size() != 5)
            throw MalformedRow("bad factor CSV row in " + path.string());
        s.dates.push_back(parse_date(cells[0]));
        s.z_on.push_back(parse_cell(cells[1]));
        s.z_off.push_back(parse_cell(cells[2]));
        s.idx_on.push_back(parse_cell(cells[3]));
        s.idx_off.push_back(parse_cell(cells[4]));
    }
    return s;
}

void write_risk_shift_csv(const std::filesystem::path& path, const RiskShiftCurve& c) {
    std::vector<std::string> lines = {"date,rho" + std::to_string(c.window)};
    for (std::size_t t = 0; t < c.dates.size(); ++t)
        lines.push_back(to_string(c.dates[t]) + "," + format_cell(c.rho[t]));
    write_lines(path, lines);
}

RiskShiftCurve read_risk_shift_csv(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty() || lines[0].rfind("date,rho", 0) != 0)
        throw MalformedRow("bad risk shift CSV header in " + path.string());
    RiskShiftCurve c;
    c.window = std::stoi(lines[0].substr(8));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto cells = split_csv_line(lines[i]);
        if (cells.size() != 2)
            throw MalformedRow("bad risk shift CSV row in " + path.string());
        c.dates.push_back(parse_date(cells[0]));
        c.rho.push_back(parse_cell(cells[1]));
    }
    return c;
}

Eigen::MatrixXd read_holdings_csv(const std::filesystem::path& path,
                                  const std::vector<std::string>& stock_order,
                                  const std::vector<std::string>& etf_order) {
    auto lines = read_lines(path);
    if (lines.empty()) throw EmptyInput("empty holdings file " + path.string());
    const auto header = split_csv_line(lines[0]);
    if (header.empty() || header[0] != "etf")
        throw MalformedRow("holdings header must start with 'etf' in " + path.string());

    std::map<std::string, long> stock_col;
    for (std::size_t j = 1; j < header.size(); ++j)
        stock_col[header[j]] = static_cast<long>(j - 1);

    std::map<std::string, std::vector<double>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto cells = split_csv_line(lines[i]);
        if (cells.size() != header.size())
            throw MalformedRow("holdings row width mismatch at line " +
                               std::to_string(i + 1) + " in " + path.string());
        std::vector<double> w;
        for (std::size_t j = 1; j < cells.size(); ++j) w.push_back(parse_cell(cells[j]));
        if (!rows.emplace(cells[0], std::move(w)).second)
            throw DuplicateKey("duplicate holdings row '" + cells[0] + "'");
    }

    Eigen::MatrixXd out(static_cast<long>(stock_order.size()),
                        static_cast<long>(etf_order.size()));
    for (std::size_t e = 0; e < etf_order.size(); ++e) {
        const auto rit = rows.find(etf_order[e]);
        if (rit == rows.end())
            throw AssetOrderMismatch("holdings: no row for ETF '" + etf_order[e] + "'");
        for (std::size_t s = 0; s < stock_order.size(); ++s) {
            const auto cit = stock_col.find(stock_order[s]);
            if (cit == stock_col.end())
                throw AssetOrderMismatch("holdings: no column for stock '" +
                                         stock_order[s] + "'");
            out(static_cast<long>(s), static_cast<long>(e)) =
                rit->second[cit->second];
        }
    }
    return out;
}

}  // namespace fincon
