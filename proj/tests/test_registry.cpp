#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fincon/errors.hpp"
#include "fincon/registry.hpp"
#include "fincon/synth.hpp"
#include "test_util.hpp"

using namespace fincon;

namespace {

ComponentMap map_from(const Eigen::MatrixXd& loadings) {
    ComponentMap m;
    m.loadings = loadings;
    for (Eigen::Index j = 0; j < loadings.cols(); ++j)
        m.asset_order.push_back("A" + std::to_string(j));
    m.component_order = default_component_labels(static_cast<int>(loadings.rows()));
    m.k_ica = static_cast<int>(loadings.rows());
    return m;
}

AssetPanel panel_from(const Eigen::MatrixXd& values) {
    AssetPanel p;
    p.values = values;
    Date d{2012, 3, 1};
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        p.dates.push_back(d);
        d = next_day(d);
    }
    for (Eigen::Index j = 0; j < values.cols(); ++j)
        p.assets.push_back("A" + std::to_string(j));
    return p;
}

// Exhaustive assignment oracle over all permutations of b's rows.
double brute_force_total(const Eigen::MatrixXd& score) {
    const int k = static_cast<int>(score.rows());
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1.0;
    do {
        double total = 0.0;
        for (int i = 0; i < k; ++i) total += score(i, perm[i]);
        best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

Eigen::MatrixXd abs_corr_matrix(const ComponentMap& a, const ComponentMap& b) {
    const int k = static_cast<int>(a.loadings.rows());
    Eigen::MatrixXd m(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            m(i, j) = std::abs(testutil::pearson(Eigen::VectorXd(a.loadings.row(i)),
                                                 Eigen::VectorXd(b.loadings.row(j))));
    return m;
}

}  // namespace

TEST_CASE("iq is one for identical members and zero when intra spread is total") {
    Eigen::VectorXd u(3), v(3), w(3);
    u << 1.0, 0.0, 2.0;
    v << 0.0, 1.0, -1.0;
    w << 3.0, -2.0, 0.5;
    std::vector<Eigen::VectorXd> full = {u, v, w};

    CHECK(iq_score({u, u, u}, full) == 1.0);
    // A cluster holding the entire stack has intra variance equal to the
    // total variance by definition.
    CHECK(iq_score(full, full) == 0.0);
}

TEST_CASE("iq matches a hand-computed variance ratio") {
    Eigen::VectorXd a(2), b(2), c(2), d(2);
    a << 0.0, 0.0;
    b << 2.0, 0.0;
    c << 10.0, 0.0;
    d << 14.0, 0.0;
    // Cluster {a,b}: mean (1,0), mean squared deviation (1+1)/2 = 1.
    // Stack {a,b,c,d}: mean (6.5,0), msd (42.25+20.25+12.25+56.25)/4 = 32.75.
    const double expect = 1.0 - 1.0 / 32.75;
    CHECK(iq_score({a, b}, {a, b, c, d}) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("iq rejects a stack with zero total variance") {
    Eigen::VectorXd u(2);
    u << 1.0, 2.0;
    CHECK_THROWS_AS(iq_score({u}, {u, u, u}), ZeroTotalVariance);
}

TEST_CASE("identical runs collapse to run zero with iq exactly one") {
    auto run = map_from(testutil::random_matrix(3, 10, 7));
    std::vector<ComponentMap> runs(6, run);
    auto res = consensus_from_runs(runs);
    CHECK((res.map.loadings.array() == run.loadings.array()).all());
    REQUIRE(res.map.iq.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(res.map.iq(i) == 1.0);
        CHECK(res.cluster_sizes[i] == 6);
    }
    CHECK_FALSE(res.imbalance_warning);
}

TEST_CASE("permuted and negated copies cluster into size-2 groups with iq one") {
    Eigen::MatrixXd base = testutil::random_matrix(2, 12, 9);
    ComponentMap run0 = map_from(base);
    Eigen::MatrixXd swapped(2, 12);
    swapped.row(0) = -base.row(1);
    swapped.row(1) = base.row(0);
    ComponentMap run1 = map_from(swapped);

    auto res = consensus_from_runs({run0, run1});
    REQUIRE(res.clusters.size() == 2);
    for (int i = 0; i < 2; ++i) {
        CHECK(res.cluster_sizes[i] == 2);
        CHECK(res.map.iq(i) == 1.0);
    }
}

TEST_CASE("a planted noise component scores below the planted signals") {
    const int n = 10, k_true = 2, k_fit = 3;
    auto sources = gen_sources(k_true, 400, SourceDist::LAPLACE, 301);
    auto mixing = gen_mixing(n, k_true, 302);
    auto model = mix(mixing, sources, 0.08, 303);
    auto panel = panel_from(model.data.transpose());
    auto stack = build_pseudo_subjects(panel, 40, 20);

    IcassoOptions opt;
    opt.r_runs = 8;
    auto res = icasso_consensus(stack, k_fit, k_fit, k_fit, 304, opt);

    // The two rows that track a true mixing column are the signals; the
    // leftover row is the noise fit.
    std::vector<double> signal_score(k_fit, 0.0);
    for (int i = 0; i < k_fit; ++i) {
        for (int j = 0; j < k_true; ++j) {
            const double r = std::abs(
                testutil::pearson(Eigen::VectorXd(res.map.loadings.row(i)),
                                  Eigen::VectorXd(mixing.col(j))));
            signal_score[i] = std::max(signal_score[i], r);
        }
    }
    const int noise_row = static_cast<int>(
        std::min_element(signal_score.begin(), signal_score.end()) - signal_score.begin());
    for (int i = 0; i < k_fit; ++i) {
        if (i == noise_row) continue;
        CHECK(res.map.iq(i) > res.map.iq(noise_row));
    }
}

TEST_CASE("ensemble runs are deterministic and share shape") {
    auto panel = panel_from(testutil::random_matrix(90, 6, 21));
    auto stack = build_pseudo_subjects(panel, 30, 10);
    auto e1 = run_ensemble(stack, 4, 2, 2, 2, 500);
    auto e2 = run_ensemble(stack, 4, 2, 2, 2, 500);
    REQUIRE(e1.runs.size() == 4);
    for (int r = 0; r < 4; ++r) {
        CHECK(e1.seeds[r] == 500u + static_cast<std::uint64_t>(r));
        CHECK(e1.runs[r].asset_order == stack.asset_order);
        CHECK(e1.runs[r].loadings.rows() == 2);
        CHECK((e1.runs[r].loadings.array() == e2.runs[r].loadings.array()).all());
    }
}

TEST_CASE("window bootstrap changes the data a run sees") {
    auto panel = panel_from(testutil::random_matrix(90, 5, 23));
    auto stack = build_pseudo_subjects(panel, 30, 10);
    auto seed_only = run_ensemble(stack, 3, 2, 2, 2, 11, ResampleScheme::SEED_ONLY);
    auto boot = run_ensemble(stack, 3, 2, 2, 2, 11, ResampleScheme::WINDOW_BOOTSTRAP);
    bool any_differ = false;
    for (int r = 0; r < 3; ++r)
        if (!(seed_only.runs[r].loadings.array() == boot.runs[r].loadings.array()).all())
            any_differ = true;
    CHECK(any_differ);
}

TEST_CASE("a lopsided clustering raises the imbalance warning") {
    const int n = 8;
    Eigen::MatrixXd r0 = Eigen::MatrixXd::Zero(2, n);
    r0(0, 0) = 1.0;                      // u = e1
    r0.row(1).head(2).setConstant(1.0);  // v ~ e1 + e2
    r0.row(1).normalize();
    Eigen::MatrixXd r1 = Eigen::MatrixXd::Zero(2, n);
    r1(0, 0) = 1.0;
    r1(0, 1) = 0.05;  // u' barely off u
    r1.row(0).normalize();
    r1(1, 3) = 1.0;  // w = e4, far from everything

    auto res = consensus_from_runs({map_from(r0), map_from(r1)});
    std::vector<int> sizes = res.cluster_sizes;
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes[0] == 1);
    CHECK(sizes[1] == 3);
    CHECK(res.imbalance_warning);
}

TEST_CASE("self-match is the identity with unit correlations") {
    auto a = map_from(testutil::random_matrix(4, 20, 31));
    auto m = match_components(a, a);
    for (int i = 0; i < 4; ++i) {
        CHECK(m.permutation[i] == i);
        CHECK(m.signs[i] == 1);
        CHECK(m.matched_abs_corr(i) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(m.mean_abs_corr == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a swapped and negated copy matches back with recorded signs") {
    auto a = map_from(testutil::random_matrix(3, 15, 37));
    Eigen::MatrixXd shuffled(3, 15);
    shuffled.row(0) = -a.loadings.row(1);  // b0 = -a1
    shuffled.row(1) = a.loadings.row(0);   // b1 = +a0
    shuffled.row(2) = a.loadings.row(2);   // b2 = +a2
    auto b = map_from(shuffled);
    auto m = match_components(a, b);
    CHECK(m.permutation[0] == 1);
    CHECK(m.permutation[1] == 0);
    CHECK(m.permutation[2] == 2);
    CHECK(m.signs[0] == 1);
    CHECK(m.signs[1] == -1);
    CHECK(m.signs[2] == 1);
    for (int i = 0; i < 3; ++i)
        CHECK(m.matched_abs_corr(i) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matching equals exhaustive permutation search on 6x50 maps") {
    for (unsigned seed = 0; seed < 20; ++seed) {
        auto a = map_from(testutil::random_matrix(6, 50, 100 + seed));
        auto b = map_from(testutil::random_matrix(6, 50, 200 + seed));
        auto m = match_components(a, b);
        double total = 0.0;
        for (int i = 0; i < 6; ++i) total += m.matched_abs_corr(i);
        CHECK(total == doctest::Approx(brute_force_total(abs_corr_matrix(a, b)))
                           .epsilon(1e-12));
    }
}

TEST_CASE("match totals are symmetric and permutations inverse") {
    auto a = map_from(testutil::random_matrix(5, 30, 41));
    auto b = map_from(testutil::random_matrix(5, 30, 42));
    auto ab = match_components(a, b);
    auto ba = match_components(b, a);
    CHECK(ab.mean_abs_corr == doctest::Approx(ba.mean_abs_corr).epsilon(1e-12));
    for (int i = 0; i < 5; ++i) CHECK(ba.permutation[ab.permutation[i]] == i);
}

TEST_CASE("a constant loading row cannot be matched") {
    auto a = map_from(testutil::random_matrix(3, 10, 43));
    Eigen::MatrixXd bad = a.loadings;
    bad.row(1).setConstant(0.3);
    CHECK_THROWS_AS(match_components(a, map_from(bad)), ZeroVarianceComponent);
}

TEST_CASE("aligning a fully negated map restores the original") {
    auto a = map_from(testutil::random_matrix(3, 12, 47));
    auto b = map_from(Eigen::MatrixXd(-a.loadings));
    auto m = match_components(a, b);
    auto aligned = align_signs(a, b, m);
    CHECK((aligned.loadings.array() == a.loadings.array()).all());
}

TEST_CASE("align_signs is idempotent and leaves correlations non-negative") {
    auto a = map_from(testutil::random_matrix(4, 25, 51));
    auto b = map_from(testutil::random_matrix(4, 25, 52));
    auto m = match_components(a, b);
    auto once = align_signs(a, b, m);
    for (int i = 0; i < 4; ++i)
        CHECK(testutil::pearson(Eigen::VectorXd(a.loadings.row(i)),
                                Eigen::VectorXd(once.loadings.row(i))) >= 0.0);
    auto m2 = match_components(a, once);
    auto twice = align_signs(a, once, m2);
    CHECK((twice.loadings.array() == once.loadings.array()).all());
}

TEST_CASE("a positive reference loading is kept as Risk-On unchanged") {
    Eigen::MatrixXd load(1, 3);
    load << 0.9, 0.1, -0.2;
    auto map = map_from(load);
    auto canon = canonical_polarity(map, {"A0"});
    CHECK(canon.risk_on == 0);
    CHECK((canon.map.loadings.array() == load.array()).all());
}

TEST_CASE("a negative reference loading is flipped positive") {
    Eigen::MatrixXd load(1, 3);
    load << -0.9, 0.1, -0.2;
    auto canon = canonical_polarity(map_from(load), {"A0"});
    CHECK(canon.risk_on == 0);
    CHECK(canon.map.loadings(0, 0) == 0.9);
    CHECK(canon.map.loadings(0, 1) == -0.1);
}

TEST_CASE("Risk-On selection agrees with a direct scan over components") {
    auto map = map_from(testutil::random_matrix(6, 12, 61));
    std::vector<std::string> refs = {"A1", "A4", "A7", "A10"};
    std::vector<int> ref_cols = {1, 4, 7, 10};

    int expect = -1;
    double best = -1.0;
    for (int i = 0; i < 6; ++i) {
        double mean = 0.0;
        for (int c : ref_cols) mean += map.loadings(i, c);
        mean = std::abs(mean / static_cast<double>(ref_cols.size()));
        if (mean > best) {
            best = mean;
            expect = i;
        }
    }
    auto canon = canonical_polarity(map, refs);
    CHECK(canon.risk_on == expect);
    double mean_after = 0.0;
    for (int c : ref_cols) mean_after += canon.map.loadings(canon.risk_on, c);
    CHECK(mean_after > 0.0);
    CHECK(canon.risk_off >= 0);
    CHECK(canon.risk_off != canon.risk_on);
    // Risk-Off carries the negative polarity convention on the reference.
    double mean_off = 0.0;
    for (int c : ref_cols) mean_off += canon.map.loadings(canon.risk_off, c);
    CHECK(mean_off <= 0.0);
}

TEST_CASE("canonical_polarity is idempotent") {
    auto map = map_from(testutil::random_matrix(4, 10, 63));
    auto once = canonical_polarity(map, {"A2", "A5"});
    auto twice = canonical_polarity(once.map, {"A2", "A5"});
    CHECK(twice.risk_on == once.risk_on);
    CHECK(twice.risk_off == once.risk_off);
    CHECK((twice.map.loadings.array() == once.map.loadings.array()).all());
}

TEST_CASE("canonical_polarity never reorders rows") {
    auto map = map_from(testutil::random_matrix(5, 8, 64));
    auto canon = canonical_polarity(map, {"A0", "A3"});
    for (int i = 0; i < 5; ++i) {
        const double plus = (canon.map.loadings.row(i) - map.loadings.row(i)).norm();
        const double minus = (canon.map.loadings.row(i) + map.loadings.row(i)).norm();
        CHECK(std::min(plus, minus) == 0.0);
    }
}

TEST_CASE("an empty reference set is rejected") {
    auto map = map_from(testutil::random_matrix(2, 4, 65));
    CHECK_THROWS_AS(canonical_polarity(map, {}), EmptyReferenceSet);
    CHECK_THROWS_AS(canonical_polarity(map, {"ZZZ"}), EmptyReferenceSet);
}

TEST_CASE("aggregating a single map reproduces it with zero IQR") {
    auto map = map_from(testutil::random_matrix(3, 9, 71));
    map.iq = Eigen::VectorXd::Constant(3, 0.93);
    auto agg = aggregate_era({map}, "S1");
    CHECK(agg.label == "S1");
    CHECK(agg.n_maps == 1);
    CHECK((agg.mean_map.loadings.array() == map.loadings.array()).all());
    for (int i = 0; i < 3; ++i) {
        CHECK(agg.iq_median(i) == 0.93);
        CHECK(agg.iq_iqr(i) == 0.0);
    }
}

TEST_CASE("alignment before aggregation stops sign cancellation") {
    auto a = map_from(testutil::random_matrix(2, 10, 73));
    auto b = map_from(Eigen::MatrixXd(-a.loadings));
    auto aligned_b = align_signs(a, b, match_components(a, b));
    auto agg = aggregate_era({a, aligned_b}, "S2");
    // Without alignment the mean would vanish; aligned it equals a.
    CHECK((agg.mean_map.loadings.array() == a.loadings.array()).all());
}

TEST_CASE("iq medians and IQRs use linear-interpolation quantiles") {
    const std::vector<double> iqs = {0.7, 0.8, 0.9, 0.95, 1.0};
    auto base = map_from(testutil::random_matrix(2, 6, 77));
    std::vector<ComponentMap> maps;
    for (double q : iqs) {
        ComponentMap m = base;
        m.iq = Eigen::VectorXd(2);
        m.iq << q, 1.0;
        maps.push_back(m);
    }
    auto agg = aggregate_era(maps, "S3");
    CHECK(agg.iq_median(0) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(agg.iq_iqr(0) == doctest::Approx(0.15).epsilon(1e-14));
    CHECK(agg.iq_median(1) == 1.0);
    CHECK(agg.iq_iqr(1) == 0.0);
}

TEST_CASE("occurrence rate counts strict exceedances") {
    CHECK(occurrence_rate({1.0, 1.0, 1.0}) == 1.0);
    CHECK(occurrence_rate({0.9, 0.9, 0.9}) == 0.0);  // strict inequality
    CHECK(occurrence_rate({0.95, 0.85, 0.91, 0.5}) == 0.5);
}

TEST_CASE("occurrence rate is monotone non-increasing in the threshold") {
    std::mt19937_64 eng(79);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> series(40);
    for (double& v : series) v = unif(eng);
    double prev = 2.0;
    for (double thr = 0.0; thr <= 1.0; thr += 0.05) {
        const double rate = occurrence_rate(series, thr);
        CHECK(rate <= prev);
        prev = rate;
    }
}

TEST_CASE("an era matched against itself scores unit correlation") {
    auto a = map_from(testutil::random_matrix(3, 14, 81));
    EraAggregate ea;
    ea.label = "S1";
    ea.mean_map = a;
    EraAggregate eb = ea;
    eb.label = "S2";
    auto sim = cross_era_similarity({ea, eb});
    REQUIRE(sim.labels.size() == 2);
    CHECK(sim.mean_abs_corr(0, 0) == 1.0);
    CHECK(sim.mean_abs_corr(1, 1) == 1.0);
    CHECK(sim.mean_abs_corr(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(sim.per_component.count("S1|S2") == 1);
    CHECK(sim.per_component.at("S1|S2").minCoeff() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("shared-mixing eras stay more similar than independent ones") {
    const int n = 20, k = 3;
    auto mixing = gen_mixing(n, k, 501);
    auto era_map = [&](const Eigen::MatrixXd& mix_mat, std::uint64_t seed) {
        auto sources = gen_sources(k, 500, SourceDist::LAPLACE, seed);
        auto model = mix(mix_mat, sources, 0.05, seed + 1);
        auto panel = panel_from(model.data.transpose());
        auto stack = build_pseudo_subjects(panel, 40, 20);
        auto dec = group_decompose(stack, k, k, k, seed + 2);
        return dec.map;
    };
    EraAggregate a, b_shared, b_indep;
    a.label = "A";
    a.mean_map = era_map(mixing, 601);
    b_shared.label = "B";
    b_shared.mean_map = era_map(mixing, 701);
    b_indep.label = "C";
    b_indep.mean_map = era_map(gen_mixing(n, k, 801), 901);

    auto sim = cross_era_similarity({a, b_shared, b_indep});
    const double shared = sim.mean_abs_corr(0, 1);
    const double indep = sim.mean_abs_corr(0, 2);
    CHECK(shared > 0.9);
    CHECK(indep < shared);
}
