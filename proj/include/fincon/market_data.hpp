#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "fincon/date.hpp"

namespace fincon {

struct DailyBar {
    Date date;
    std::string ticker;
    double adj_close = 0.0;
    double close = 0.0;
    double volume = 0.0;
};

enum class FeatureKind { RAW_PRICE, VWAP, LOGRET, RAW_LOGRET };

std::string to_string(FeatureKind k);
FeatureKind feature_kind_from_string(const std::string& s);

// Date-by-asset value panel.  Gaps are NaN until clean_panel has run; every
// downstream stage requires a gapless panel with strictly increasing dates.
struct AssetPanel {
    std::vector<Date> dates;
    std::vector<std::string> assets;
    Eigen::MatrixXd values;  // dates.size() x assets.size()
    FeatureKind kind = FeatureKind::RAW_PRICE;
    int window = 0;  // feature window length, 0 for raw panels

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

struct EraSpec {
    std::string label;
    Date start;
    Date end;  // inclusive
};

struct EraPanel {
    std::string label;
    AssetPanel panel;
};

// Loads a bar tape "date,ticker,adj_close,close,volume" (header required).
// Rows come back sorted by (date, ticker).  Throws MalformedRow with the
// 1-based line number, DuplicateKey on a repeated (date, ticker) pair and
// NonPositivePrice on prices <= 0.
std::vector<DailyBar> load_bars(const std::filesystem::path& path);
std::vector<DailyBar> parse_bars(const std::vector<std::string>& lines,
                                 const std::string& origin);

// Pivots the tape into aligned panels; (date, ticker) pairs that never
// traded are NaN in both outputs.
struct PivotResult {
    AssetPanel adj_close;
    AssetPanel volume;
};
PivotResult pivot_bars(const std::vector<DailyBar>& bars);

// Volume-weighted average price over each w-long window; output t covers
// input days [t, t+w).  Throws ZeroVolumeWindow when a window has no volume.
std::vector<double> vwap_series(const std::vector<double>& prices,
                                const std::vector<double>& volumes, int w);

// Mean daily log return over each w-long window of returns; output length is
// len(prices) - w.  Throws NonPositivePrice.
std::vector<double> logret_series(const std::vector<double>& prices, int w);

// Drops dates with less than 95% valid entries, forward-fills what remains.
// A column whose first kept row is still a gap cannot be filled and raises
// UnfillableColumn.  Idempotent on its own output.
AssetPanel clean_panel(const AssetPanel& raw);

// Rolling features for every asset of a cleaned panel.  kind selects the
// formula; w is ignored for RAW_LOGRET (always 1 day).
AssetPanel build_feature_panel(const AssetPanel& adj_close, const AssetPanel& volume,
                               FeatureKind kind, int w);

// Inclusive date-range slices, one per era, in the given order.  Throws
// EmptyEra when an era catches no rows.
std::vector<EraPanel> segment_eras(const AssetPanel& panel,
                                   const std::vector<EraSpec>& eras);

std::vector<EraSpec> default_eras();
std::vector<EraSpec> parse_eras(const std::string& text);

// Panel CSV: "date,<ticker>,..." plus a key=value metadata sidecar next to
// it (same stem, .meta extension).
void write_panel_csv(const std::filesystem::path& path, const AssetPanel& panel);
AssetPanel read_panel_csv(const std::filesystem::path& path);

}  // namespace fincon
