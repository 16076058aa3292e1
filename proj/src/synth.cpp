#include "fincon/synth.hpp"

#include <cmath>
#include <cstdio>

#include "fincon/errors.hpp"
#include "fincon/registry.hpp"
#include "fincon/rng.hpp"
#include "fincon/stats.hpp"

namespace fincon {

std::string to_string(SourceDist d) {
    switch (d) {
        case SourceDist::LAPLACE: return "LAPLACE";
        case SourceDist::UNIFORM: return "UNIFORM";
        case SourceDist::SIGNED_SQUARE: return "SIGNED_SQUARE";
    }
    return "LAPLACE";
}

SourceDist source_dist_from_string(const std::string& s) {
    if (s == "LAPLACE") return SourceDist::LAPLACE;
    if (s == "UNIFORM") return SourceDist::UNIFORM;
    if (s == "SIGNED_SQUARE") return SourceDist::SIGNED_SQUARE;
    throw ConfigError("unknown source distribution '" + s + "'");
}

Eigen::MatrixXd gen_sources(int k, long t, SourceDist dist, std::uint64_t seed) {
    if (k < 1 || t < 2) throw Precondition("gen_sources: need k >= 1 and t >= 2");
    Eigen::MatrixXd s(k, t);
    for (int i = 0; i < k; ++i) {
        Rng rng(derive_seed(seed, "sources", static_cast<std::uint64_t>(i)));
        for (long j = 0; j < t; ++j) {
            switch (dist) {
                case SourceDist::LAPLACE: s(i, j) = rng.laplace(); break;
                case SourceDist::UNIFORM: s(i, j) = rng.uniform(-1.0, 1.0); break;
                case SourceDist::SIGNED_SQUARE: s(i, j) = rng.signed_square(); break;
            }
        }
        const double mean = s.row(i).mean();
        s.row(i).array() -= mean;
        const double sd = std::sqrt(sample_variance(s.row(i).transpose()));
        if (sd <= 0.0) throw DegenerateInput("gen_sources: degenerate draw");
        s.row(i) /= sd;
    }
    return s;
}

Eigen::MatrixXd gen_mixing(int n, int k, std::uint64_t seed) {
    if (n < 1 || k < 1) throw Precondition("gen_mixing: need n, k >= 1");
    Rng rng(derive_seed(seed, "mixing"));
    Eigen::MatrixXd a(n, k);
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < n; ++i) a(i, j) = rng.normal();
        a.col(j) /= a.col(j).norm();
    }
    return a;
}

MixingModel mix(const Eigen::MatrixXd& mixing, const Eigen::MatrixXd& sources,
                double noise, std::uint64_t noise_seed) {
    if (mixing.cols() != sources.rows())
        throw DimensionMismatch("mix: mixing columns must equal source rows");
    MixingModel m;
    m.mixing = mixing;
    m.sources = sources;
    m.data = mixing * sources;
    if (noise > 0.0) {
        Rng rng(derive_seed(noise_seed, "mixnoise"));
        for (Eigen::Index j = 0; j < m.data.cols(); ++j)
            for (Eigen::Index i = 0; i < m.data.rows(); ++i)
                m.data(i, j) += noise * rng.normal();
    }
    return m;
}

namespace {

ComponentMap rows_as_map(const Eigen::MatrixXd& rows) {
    ComponentMap map;
    map.loadings = rows;
    map.k_ica = static_cast<int>(rows.rows());
    map.component_order = default_component_labels(map.k_ica);
    for (Eigen::Index j = 0; j < rows.cols(); ++j)
        map.asset_order.push_back("c" + std::to_string(j));
    return map;
}

}  // namespace

double recovery_score(const Eigen::MatrixXd& w_est, const WhiteningResult& whitening,
                      const MixingModel& model) {
    const Eigen::MatrixXd recovered = w_est * whitening.apply(model.data);
    if (recovered.rows() != model.sources.rows())
        throw DimensionMismatch("recovery_score: estimated component count differs");
    return match_components(rows_as_map(recovered), rows_as_map(model.sources))
        .mean_abs_corr;
}

double loading_recovery(const Eigen::MatrixXd& loadings, const Eigen::MatrixXd& mixing) {
    if (loadings.rows() != mixing.cols() || loadings.cols() != mixing.rows())
        throw DimensionMismatch("loading_recovery: shapes are not transposes");
    return match_components(rows_as_map(loadings),
                            rows_as_map(mixing.transpose()))
        .mean_abs_corr;
}

RegimeTensorTruth gen_regime_tensor(const std::vector<Eigen::MatrixXd>& templates,
                                    const std::vector<RegimeSpan>& schedule,
                                    double noise, std::uint64_t seed) {
    if (templates.empty() || schedule.empty())
        throw Precondition("gen_regime_tensor: need templates and a schedule");
    if (noise <= 0.0)
        throw Precondition("gen_regime_tensor: noise must be positive");
    const auto k = templates[0].rows();
    std::vector<Eigen::MatrixXd> chol;
    for (std::size_t r = 0; r < templates.size(); ++r) {
        const auto& tpl = templates[r];
        if (tpl.rows() != k || tpl.cols() != k)
            throw DimensionMismatch("gen_regime_tensor: templates disagree on size");
        if ((tpl - tpl.transpose()).cwiseAbs().maxCoeff() > 1e-10)
            throw NotPSD("gen_regime_tensor: template " + std::to_string(r) +
                         " is not symmetric");
        const Eigen::LLT<Eigen::MatrixXd> llt(tpl);
        if (llt.info() != Eigen::Success) {
            // semi-definite templates are fine; only negative eigenvalues are not
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tpl);
            if (es.eigenvalues().minCoeff() < -1e-10)
                throw NotPSD("gen_regime_tensor: template " + std::to_string(r) +
                             " has a negative eigenvalue");
            Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
            chol.push_back(es.eigenvectors() * clipped.asDiagonal());
        } else {
            chol.push_back(llt.matrixL());
        }
    }

    long total = 0;
    for (const auto& span : schedule) {
        if (span.regime < 0 || span.regime >= static_cast<int>(templates.size()))
            throw Precondition("gen_regime_tensor: span names unknown regime");
        if (span.length < 1) throw Precondition("gen_regime_tensor: empty span");
        total += span.length;
    }

    RegimeTensorTruth out;
    out.activations.values.resize(k, total);
    out.activations.component_order = default_component_labels(static_cast<int>(k));
    out.labels.resize(total);
    Rng rng(derive_seed(seed, "regimes"));
    long t = 0;
    for (const auto& span : schedule) {
        for (long s = 0; s < span.length; ++s, ++t) {
            Eigen::VectorXd xi(k);
            for (Eigen::Index i = 0; i < k; ++i) xi(i) = rng.normal();
            Eigen::VectorXd sample = chol[span.regime] * xi;
            for (Eigen::Index i = 0; i < k; ++i)
                sample(i) += noise * rng.normal();
            out.activations.values.col(t) = sample;
            out.labels[t] = span.regime;
        }
    }
    out.activations.window_labels.resize(total);
    for (long i = 0; i < total; ++i)
        out.activations.window_labels[i] = std::to_string(i);
    return out;
}

std::vector<int> window_labels(const std::vector<int>& labels, int delta, int stride) {
    if (delta < 1 || stride < 1)
        throw Precondition("window_labels: delta and stride must be >= 1");
    const long T = static_cast<long>(labels.size());
    if (delta > T) throw WindowTooLong("window_labels: delta exceeds series");
    std::vector<int> out;
    for (long start = 0; start + delta <= T; start += stride)
        out.push_back(labels[start + delta / 2]);
    return out;
}

SyntheticScenario gen_scenario(int n_assets, long t_days, int k, SourceDist dist,
                               double noise, double scale, std::uint64_t seed) {
    if (n_assets < 1 || t_days < 2)
        throw Precondition("gen_scenario: need assets >= 1 and t_days >= 2");
    if (scale <= 0.0) throw Precondition("gen_scenario: scale must be positive");

    SyntheticScenario sc;
    const Eigen::MatrixXd sources = gen_sources(k, t_days, dist, seed);
    const Eigen::MatrixXd mixing = gen_mixing(n_assets, k, seed);
    sc.model = mix(mixing, sources, noise, seed);

    // Daily returns are the mixed signals shrunk to price-like magnitude.
    sc.returns.values = (sc.model.data * scale).transpose();
    sc.returns.kind = FeatureKind::RAW_LOGRET;
    sc.returns.window = 1;
    for (int j = 0; j < n_assets; ++j) {
        char name[16];
        std::snprintf(name, sizeof(name), "A%02d", j);
        sc.returns.assets.push_back(name);
    }

    Date d{2005, 1, 3};
    std::vector<Date> price_dates(t_days + 1);
    for (long i = 0; i <= t_days; ++i) {
        price_dates[i] = d;
        d = next_day(d);
    }
    sc.returns.dates.assign(price_dates.begin() + 1, price_dates.end());

    sc.bars.reserve(static_cast<std::size_t>(n_assets) * (t_days + 1));
    for (int j = 0; j < n_assets; ++j) {
        double log_price = 0.0;
        for (long i = 0; i <= t_days; ++i) {
            if (i > 0) log_price += sc.returns.values(i - 1, j);
            DailyBar bar;
            bar.date = price_dates[i];
            bar.ticker = sc.returns.assets[j];
            bar.adj_close = 100.0 * std::exp(log_price);
            bar.close = bar.adj_close;
            bar.volume = 1e6;
            sc.bars.push_back(std::move(bar));
        }
    }
    std::sort(sc.bars.begin(), sc.bars.end(), [](const DailyBar& a, const DailyBar& b) {
        return std::tie(a.date, a.ticker) < std::tie(b.date, b.ticker);
    });
    return sc;
}

}  // namespace fincon
