#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "fincon/date.hpp"
#include "fincon/group_ica.hpp"
#include "fincon/registry.hpp"

namespace fincon {

// Daily factor coordinates and cumulative indices for the Risk-On/Risk-Off
// pair.  Missing values are NaN in memory and empty cells on disk.
struct FactorSeries {
    std::vector<Date> dates;
    std::vector<double> z_on;
    std::vector<double> z_off;
    std::vector<double> idx_on;
    std::vector<double> idx_off;
};

struct RiskShiftCurve {
    std::vector<Date> dates;
    std::vector<double> rho;  // NaN where the window is undefined
    int window = 252;
};

// z[t] = <w, r_t> for every row of a daily return panel.
std::vector<double> project_returns(const AssetPanel& returns, const Eigen::VectorXd& w);

// Idx[t] = 100 * exp(sum of z up to and including t).  Throws OverflowGuard
// when |cumulative sum| exceeds 700 (exp would overflow or flush to zero).
std::vector<double> factor_index(const std::vector<double>& z, double base = 100.0);

// Pearson correlation over a trailing window: out[t] covers [t-w+1, t] and
// the first w-1 slots are NaN.  A window where either side is constant
// yields NaN rather than an error.
std::vector<double> rolling_pearson(const std::vector<double>& x,
                                    const std::vector<double>& y, int window);

// Interquartile range of the defined values of a rolling correlation curve.
// Throws InsufficientData with fewer than 4 defined points.
double risk_shift_amplitude(const std::vector<double>& rho);

// Full factor stage: project daily returns on the Risk-On/Risk-Off loading
// rows, build the indices and the rolling correlation between the two.
struct FactorEngineResult {
    FactorSeries series;
    RiskShiftCurve shift;
    double amplitude = 0.0;
};
FactorEngineResult run_factor_engine(const AssetPanel& daily_returns,
                                     const Eigen::VectorXd& w_on,
                                     const Eigen::VectorXd& w_off, int rho_window = 252);

// Cross-universe component comparison: each ETF-space component row is
// carried into stock space by the holdings matrix (stocks x etfs acting on
// the transposed loadings) and Hungarian-matched against the stock map.
MatchResult structural_overlap(const ComponentMap& stock_map, const ComponentMap& etf_map,
                               const Eigen::MatrixXd& holdings);

// Correlation of the two z series over the common dates of two factor
// serieses. Throws InsufficientOverlap below 30 shared dates.
struct SynchronyResult {
    double corr_on = 0.0;
    double corr_off = 0.0;
    int n_common = 0;
};
SynchronyResult temporal_synchrony(const FactorSeries& a, const FactorSeries& b);

void write_factor_csv(const std::filesystem::path& path, const FactorSeries& s);
FactorSeries read_factor_csv(const std::filesystem::path& path);
void write_risk_shift_csv(const std::filesystem::path& path, const RiskShiftCurve& c);
RiskShiftCurve read_risk_shift_csv(const std::filesystem::path& path);

// Holdings weights on disk: header "etf,<stock>,..." then one row per ETF.
// The result is reordered to stocks x etfs following the two given orders;
// a stock or ETF absent from the file is an AssetOrderMismatch.
Eigen::MatrixXd read_holdings_csv(const std::filesystem::path& path,
                                  const std::vector<std::string>& stock_order,
                                  const std::vector<std::string>& etf_order);

}  // namespace fincon
