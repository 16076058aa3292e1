#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "fincon/dmnc.hpp"
#include "fincon/errors.hpp"
#include "fincon/graph.hpp"
#include "fincon/ref/serial_ref.hpp"
#include "fincon/synth.hpp"
#include "test_util.hpp"

using namespace fincon;

namespace {

ActivationMatrix acts_from(const Eigen::MatrixXd& values) {
    ActivationMatrix a;
    a.values = values;
    a.component_order = default_component_labels(static_cast<int>(values.rows()));
    for (Eigen::Index t = 0; t < values.cols(); ++t)
        a.window_labels.push_back("t" + std::to_string(t));
    return a;
}

// Textbook weighted Pearson, written independently of the library kernel.
double weighted_corr(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& w) {
    const double sw = w.sum();
    const double mx = (w.array() * x.array()).sum() / sw;
    const double my = (w.array() * y.array()).sum() / sw;
    double cxy = 0.0, cxx = 0.0, cyy = 0.0;
    for (Eigen::Index s = 0; s < x.size(); ++s) {
        cxy += w(s) * (x(s) - mx) * (y(s) - my);
        cxx += w(s) * (x(s) - mx) * (x(s) - mx);
        cyy += w(s) * (y(s) - my) * (y(s) - my);
    }
    return cxy / std::sqrt(cxx * cyy);
}

}  // namespace

TEST_CASE("identical rows correlate at one, negated rows at minus one") {
    Eigen::MatrixXd slice(3, 30);
    std::mt19937_64 eng(3);
    std::normal_distribution<double> nd;
    for (int s = 0; s < 30; ++s) slice(0, s) = nd(eng);
    slice.row(1) = slice.row(0);
    slice.row(2) = -slice.row(0);
    auto wc = window_correlation(slice);
    CHECK_FALSE(wc.flagged);
    CHECK(wc.corr(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(wc.corr(0, 2) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(wc.corr(1, 2) == doctest::Approx(-1.0).epsilon(1e-14));
    for (int i = 0; i < 3; ++i) CHECK(wc.corr(i, i) == 1.0);
}

TEST_CASE("window correlation matches the textbook formula on a random slice") {
    auto slice = testutil::random_matrix(4, 30, 7);
    auto wc = window_correlation(slice);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (i == j) continue;
            const double expect = testutil::pearson(Eigen::VectorXd(slice.row(i)),
                                                    Eigen::VectorXd(slice.row(j)));
            CHECK(wc.corr(i, j) == doctest::Approx(expect).epsilon(1e-12));
        }
    // Exact symmetry by construction.
    CHECK(testutil::max_abs_diff(wc.corr, wc.corr.transpose()) == 0.0);
}

TEST_CASE("weighted correlation matches an independent weighted oracle") {
    auto slice = testutil::random_matrix(3, 25, 11);
    Eigen::VectorXd w(25);
    std::mt19937_64 eng(13);
    std::uniform_real_distribution<double> unif(0.1, 2.0);
    for (int s = 0; s < 25; ++s) w(s) = unif(eng);
    auto wc = window_correlation(slice, w);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const double expect = weighted_corr(slice.row(i).transpose(),
                                                slice.row(j).transpose(), w);
            CHECK(wc.corr(i, j) == doctest::Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("a constant row is reported and its entries become missing") {
    Eigen::MatrixXd slice = testutil::random_matrix(3, 20, 17);
    slice.row(1).setConstant(4.2);
    auto wc = window_correlation(slice);
    CHECK(wc.flagged);
    REQUIRE(wc.degenerate_rows.size() == 1);
    CHECK(wc.degenerate_rows[0] == 1);
    CHECK(std::isnan(wc.corr(0, 1)));
    CHECK(std::isnan(wc.corr(1, 2)));
    CHECK(wc.corr(1, 1) == 1.0);  // diagonal stays defined
    CHECK(!std::isnan(wc.corr(0, 2)));
}

TEST_CASE("weight vector validation") {
    auto slice = testutil::random_matrix(2, 10, 19);
    Eigen::VectorXd short_w = Eigen::VectorXd::Ones(9);
    CHECK_THROWS_AS(window_correlation(slice, short_w), LengthMismatch);
    Eigen::VectorXd neg_w = Eigen::VectorXd::Ones(10);
    neg_w(3) = -0.1;
    CHECK_THROWS_AS(window_correlation(slice, neg_w), Precondition);
}

TEST_CASE("gaussian window peaks at the midpoint and is symmetric") {
    auto w = gaussian_window(5, 1.0);
    REQUIRE(w.size() == 5);
    CHECK(w(2) == 1.0);  // exp(0) at mu = (5-1)/2
    CHECK(w(1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
    CHECK(w(1) == w(3));
    CHECK(w(0) == w(4));
    // Even width: the peak straddles the two middle samples.
    auto w4 = gaussian_window(4, 2.0);
    CHECK(w4(1) == w4(2));
    CHECK(w4(0) == w4(3));
}

TEST_CASE("a tensor over T = delta has exactly one slice") {
    auto acts = acts_from(testutil::random_matrix(3, 45, 23));
    auto tensor = build_dmnc(acts, 45);
    CHECK(tensor.size() == 1);
    CHECK(tensor.timestamps[0] == acts.window_labels.back());
}

TEST_CASE("a stationary activation stream gives identical slices") {
    // Periodic pattern, so every delta-long window sees the same sample set.
    const int k = 3, period = 4, delta = 8;
    Eigen::MatrixXd values(k, 40);
    for (int t = 0; t < 40; ++t) {
        values(0, t) = (t % period == 0) ? 1.0 : 0.0;
        values(1, t) = (t % period == 1) ? 1.0 : -1.0;
        values(2, t) = ((t / period) % 1) + ((t % period == 2) ? 0.5 : -0.5);
    }
    auto tensor = build_dmnc(acts_from(values), delta, period);
    REQUIRE(tensor.size() >= 2);
    for (long t = 1; t < tensor.size(); ++t)
        CHECK(testutil::max_abs_diff(tensor.slices[t], tensor.slices[0]) < 1e-14);
}

TEST_CASE("a planted correlation flip shows up with opposite signs") {
    // First half: rows move together; second half: opposed.
    const int t_total = 200, delta = 40;
    Eigen::MatrixXd values(2, t_total);
    std::mt19937_64 eng(29);
    std::normal_distribution<double> nd;
    for (int t = 0; t < t_total; ++t) {
        const double base = nd(eng);
        values(0, t) = base + 0.1 * nd(eng);
        values(1, t) = (t < t_total / 2 ? base : -base) + 0.1 * nd(eng);
    }
    auto tensor = build_dmnc(acts_from(values), delta);
    CHECK(tensor.slices.front()(0, 1) > 0.5);
    CHECK(tensor.slices.back()(0, 1) < -0.5);
}

TEST_CASE("slice count and stamps follow the stride arithmetic") {
    auto acts = acts_from(testutil::random_matrix(2, 100, 31));
    auto tensor = build_dmnc(acts, 45, 10);
    CHECK(tensor.size() == (100 - 45) / 10 + 1);
    for (long t = 0; t < tensor.size(); ++t)
        CHECK(tensor.timestamps[t] == acts.window_labels[t * 10 + 44]);
    CHECK_THROWS_AS(build_dmnc(acts, 101), WindowTooLong);
}

TEST_CASE("rect tensors equal the slice-wise serial reference") {
    auto acts = acts_from(testutil::random_matrix(5, 300, 37));
    auto tensor = build_dmnc(acts, 45, 3);
    auto oracle = fincon::ref::build_dmnc_slicewise(acts.values, 45, 3);
    REQUIRE(tensor.size() == static_cast<long>(oracle.size()));
    for (long t = 0; t < tensor.size(); ++t)
        CHECK(testutil::max_abs_diff(tensor.slices[t], oracle[t]) < 1e-12);
}

TEST_CASE("well-formedness holds on gaussian-tapered random tensors") {
    auto acts = acts_from(testutil::random_matrix(4, 200, 41));
    auto tensor = build_dmnc(acts, 30, 5, WindowFn::GAUSSIAN, 5.0);
    CHECK(tensor.window_fn == WindowFn::GAUSSIAN);
    for (const auto& c : tensor.slices) {
        CHECK(testutil::max_abs_diff(c, c.transpose()) <= 1e-10);
        for (int i = 0; i < 4; ++i) {
            CHECK(c(i, i) == 1.0);
            for (int j = 0; j < 4; ++j) {
                CHECK(c(i, j) <= 1.0);
                CHECK(c(i, j) >= -1.0);
            }
        }
    }
}

TEST_CASE("moving average of width one and exp alpha one are identities") {
    auto acts = acts_from(testutil::random_matrix(3, 20, 43));
    auto ma = smooth_activations(acts, SmoothKind::MOVING_AVG, 1.0);
    CHECK(testutil::max_abs_diff(ma.values, acts.values) == 0.0);
    auto ex = smooth_activations(acts, SmoothKind::EXP, 1.0);
    CHECK(testutil::max_abs_diff(ex.values, acts.values) == 0.0);
}

TEST_CASE("zscore standardizes each row with the sample convention") {
    Eigen::MatrixXd values(1, 3);
    values << 1.0, 2.0, 3.0;
    auto z = smooth_activations(acts_from(values), SmoothKind::ZSCORE, 0.0);
    CHECK(z.values(0, 0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(z.values(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(z.values(0, 2) == doctest::Approx(1.0).epsilon(1e-14));

    Eigen::MatrixXd flat(1, 5);
    flat.setConstant(2.0);
    CHECK_THROWS_AS(smooth_activations(acts_from(flat), SmoothKind::ZSCORE, 0.0),
                    DegenerateRow);
}

TEST_CASE("smoothing parameters are validated") {
    auto acts = acts_from(testutil::random_matrix(2, 10, 47));
    CHECK_THROWS_AS(smooth_activations(acts, SmoothKind::MOVING_AVG, 0.0), Precondition);
    CHECK_THROWS_AS(smooth_activations(acts, SmoothKind::EXP, 0.0), Precondition);
    CHECK_THROWS_AS(smooth_activations(acts, SmoothKind::EXP, 1.5), Precondition);
}

TEST_CASE("trailing moving average shortens at the start") {
    Eigen::MatrixXd values(1, 4);
    values << 2.0, 4.0, 6.0, 8.0;
    auto ma = smooth_activations(acts_from(values), SmoothKind::MOVING_AVG, 3.0);
    CHECK(ma.values(0, 0) == 2.0);
    CHECK(ma.values(0, 1) == 3.0);
    CHECK(ma.values(0, 2) == 4.0);
    CHECK(ma.values(0, 3) == 6.0);
}

TEST_CASE("window ordering sorts by z_on, then z_off, then index") {
    std::vector<double> sorted_on = {1.0, 2.0, 3.0};
    std::vector<double> any_off = {0.0, 0.0, 0.0};
    auto id = order_windows(sorted_on, any_off);
    CHECK(id == std::vector<long>{0, 1, 2});

    std::vector<double> reversed = {3.0, 2.0, 1.0};
    auto rev = order_windows(reversed, any_off);
    CHECK(rev == std::vector<long>{2, 1, 0});

    std::vector<double> tie_on = {1.0, 1.0, 1.0, 0.5};
    std::vector<double> tie_off = {2.0, 1.0, 1.0, 9.0};
    auto tie = order_windows(tie_on, tie_off);
    CHECK(tie == std::vector<long>{3, 1, 2, 0});
}

TEST_CASE("upper-triangle vectorization uses row-major pair order") {
    Eigen::MatrixXd c(3, 3);
    c << 1.0, 0.2, 0.3,
         0.2, 1.0, 0.4,
         0.3, 0.4, 1.0;
    auto v = vectorize_upper(c);
    REQUIRE(v.size() == 3);
    CHECK(v(0) == 0.2);
    CHECK(v(1) == 0.3);
    CHECK(v(2) == 0.4);
    auto pairs = upper_pairs(3);
    CHECK(pairs[0] == std::make_pair(0, 1));
    CHECK(pairs[1] == std::make_pair(0, 2));
    CHECK(pairs[2] == std::make_pair(1, 2));

    auto back = devectorize_upper(v, 3);
    CHECK(testutil::max_abs_diff(back, c) == 0.0);

    CHECK(vectorize_upper(Eigen::MatrixXd::Identity(6, 6)).size() == 15);

    Eigen::MatrixXd asym = c;
    asym(0, 1) += 1e-6;
    CHECK_THROWS_AS(vectorize_upper(asym), AsymmetricInput);
}

TEST_CASE("cosine and Frobenius behave on hand-built cases") {
    Eigen::VectorXd v1(3);
    v1 << 1.0, -2.0, 0.5;
    CHECK(cosine_similarity(v1, Eigen::VectorXd(3.0 * v1)) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(cosine_similarity(v1, Eigen::VectorXd::Zero(3)), ZeroVector);

    auto c1 = testutil::random_matrix(4, 4, 51);
    CHECK(frobenius_distance(c1, c1) == 0.0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd b = a;
    b(0, 1) = 1.0;
    b(1, 0) = 1.0;
    CHECK(frobenius_distance(a, b) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("similarity jumps vanish on a constant tensor") {
    Eigen::MatrixXd flat(2, 60);
    for (int t = 0; t < 60; ++t) {
        flat(0, t) = (t % 2 == 0) ? 1.0 : -1.0;
        flat(1, t) = (t % 2 == 0) ? 1.0 : -1.0;
    }
    auto tensor = build_dmnc(acts_from(flat), 10, 2);
    auto jumps = similarity_jump(tensor);
    REQUIRE(static_cast<long>(jumps.size()) == tensor.size() - 1);
    for (double j : jumps) CHECK(std::abs(j) < 1e-14);
}

TEST_CASE("distance from the baseline mean itself is zero") {
    auto acts = acts_from(testutil::random_matrix(3, 120, 53));
    auto tensor = build_dmnc(acts, 20, 4);
    auto dist = distance_to_baseline(tensor, 0, tensor.size());
    REQUIRE(static_cast<long>(dist.size()) == tensor.size());
    for (double v : dist) CHECK(v >= 0.0);

    // Plant the literal mean as one slice and measure it.
    DmncTensor t2 = tensor;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(vectorize_upper(tensor.slices[0]).size());
    for (long t = 0; t < 6; ++t) mean += vectorize_upper(tensor.slices[t]);
    mean /= 6.0;
    t2.slices.push_back(devectorize_upper(mean, 3));
    t2.timestamps.push_back("planted");
    t2.degenerate_rows.push_back({});
    auto d2 = distance_to_baseline(t2, 0, 6);
    CHECK(d2.back() == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("an isotropic baseline scores a unit offset near one") {
    // Vectors drawn i.i.d. standard normal in 3 dims; an offset of one
    // along e1 from the mean sits about one Mahalanobis unit away.
    const int dim = 3, n = 2000;
    std::mt19937_64 eng(59);
    std::normal_distribution<double> nd;
    DmncTensor tensor;
    tensor.delta = 3;
    for (int t = 0; t < n; ++t) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) v(i) = 0.5 * nd(eng);
        tensor.slices.push_back(devectorize_upper(v, 3));
        tensor.timestamps.push_back(std::to_string(t));
        tensor.degenerate_rows.push_back({});
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (int t = 0; t < n; ++t) mean += vectorize_upper(tensor.slices[t]);
    mean /= static_cast<double>(n);
    Eigen::VectorXd probe = mean;
    probe(0) += 0.5;  // one standard deviation along e1
    tensor.slices.push_back(devectorize_upper(probe, 3));
    tensor.timestamps.push_back("probe");
    tensor.degenerate_rows.push_back({});
    auto dist = distance_to_baseline(tensor, 0, n);
    CHECK(dist.back() == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("baseline windows must carry enough samples") {
    auto acts = acts_from(testutil::random_matrix(3, 60, 61));
    auto tensor = build_dmnc(acts, 20, 10);  // 5 slices, dim 3
    CHECK_THROWS_AS(distance_to_baseline(tensor, 0, 4), Precondition);
}

TEST_CASE("a constant baseline with an off-mean probe is singular") {
    DmncTensor tensor;
    tensor.delta = 3;
    Eigen::VectorXd v(3);
    v << 0.1, 0.2, 0.3;
    for (int t = 0; t < 8; ++t) {
        tensor.slices.push_back(devectorize_upper(v, 3));
        tensor.timestamps.push_back(std::to_string(t));
        tensor.degenerate_rows.push_back({});
    }
    Eigen::VectorXd off = v;
    off(0) += 1.0;
    tensor.slices.push_back(devectorize_upper(off, 3));
    tensor.timestamps.push_back("probe");
    tensor.degenerate_rows.push_back({});
    CHECK_THROWS_AS(distance_to_baseline(tensor, 0, 8), SingularCovariance);
}

TEST_CASE("structural volatility is zero on a constant tensor") {
    Eigen::MatrixXd flat(2, 40);
    for (int t = 0; t < 40; ++t) {
        flat(0, t) = (t % 2 == 0) ? 1.0 : -1.0;
        flat(1, t) = (t % 2 == 0) ? 2.0 : -2.0;
    }
    auto tensor = build_dmnc(acts_from(flat), 10, 2);
    auto vol = structural_volatility(tensor, 5);
    CHECK(vol.start == 4);
    for (double v : vol.values) CHECK(v == 0.0);
}

TEST_CASE("one alternating edge contributes 2 a^2 / K^2") {
    // Hand-built 3x3 slices: edge (0,1) alternates between +a and -a,
    // every other entry fixed.  Population variance of the +-a sequence is
    // a^2; the edge appears twice in the symmetric matrix.
    const double a = 0.6;
    const int k = 3;
    DmncTensor tensor;
    tensor.delta = 3;
    for (int t = 0; t < 10; ++t) {
        Eigen::MatrixXd c = Eigen::MatrixXd::Identity(k, k);
        c(0, 1) = c(1, 0) = (t % 2 == 0) ? a : -a;
        c(0, 2) = c(2, 0) = 0.3;
        c(1, 2) = c(2, 1) = -0.2;
        tensor.slices.push_back(c);
        tensor.timestamps.push_back(std::to_string(t));
        tensor.degenerate_rows.push_back({});
    }
    auto vol = structural_volatility(tensor, 4);
    const double expect = 2.0 * a * a / (k * k);
    for (double v : vol.values)
        CHECK(v == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("structural volatility is non-negative and permutation invariant") {
    auto acts = acts_from(testutil::random_matrix(4, 150, 67));
    auto tensor = build_dmnc(acts, 30, 5);
    auto vol = structural_volatility(tensor, 6);
    for (double v : vol.values) CHECK(v >= 0.0);

    // Relabel nodes with a fixed permutation on every slice.
    std::vector<int> perm = {2, 0, 3, 1};
    DmncTensor relabeled = tensor;
    for (auto& c : relabeled.slices) {
        Eigen::MatrixXd p(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) p(i, j) = c(perm[i], perm[j]);
        c = p;
    }
    auto vol2 = structural_volatility(relabeled, 6);
    REQUIRE(vol.values.size() == vol2.values.size());
    for (std::size_t t = 0; t < vol.values.size(); ++t)
        CHECK(vol.values[t] == doctest::Approx(vol2.values[t]).epsilon(1e-12));

    CHECK_THROWS_AS(structural_volatility(tensor, 1), Precondition);
    CHECK_THROWS_AS(structural_volatility(tensor, static_cast<int>(tensor.size()) + 1),
                    WindowTooLong);
}

TEST_CASE("structural volatility agrees with the serial reference") {
    auto acts = acts_from(testutil::random_matrix(5, 200, 71));
    auto tensor = build_dmnc(acts, 25, 3);
    auto vol = structural_volatility(tensor, 8);
    auto oracle = fincon::ref::structural_volatility_naive(tensor.slices, 8);
    REQUIRE(vol.values.size() == oracle.size());
    for (std::size_t t = 0; t < oracle.size(); ++t)
        CHECK(vol.values[t] == doctest::Approx(oracle[t]).epsilon(1e-12));
}

TEST_CASE("edge z-scores standardize each edge with sample std") {
    DmncTensor tensor;
    tensor.delta = 3;
    for (int t = 0; t < 2; ++t) {
        Eigen::MatrixXd c = Eigen::MatrixXd::Identity(3, 3);
        c(0, 1) = c(1, 0) = (t == 0) ? -1.0 : 1.0;
        c(0, 2) = c(2, 0) = 0.5;  // constant edge
        c(1, 2) = c(2, 1) = (t == 0) ? 0.0 : 0.4;
        tensor.slices.push_back(c);
        tensor.timestamps.push_back(std::to_string(t));
        tensor.degenerate_rows.push_back({});
    }
    auto ez = edge_zscores(tensor);
    REQUIRE(ez.edges.size() == 3);
    // Edge (0,1): series [-1, 1], sample std = sqrt(2), z = -+1/sqrt(2).
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(ez.z(0, 0) == doctest::Approx(-r).epsilon(1e-14));
    CHECK(ez.z(1, 0) == doctest::Approx(r).epsilon(1e-14));
    // Constant edge (0,2): missing.
    CHECK(std::isnan(ez.z(0, 1)));
    CHECK(std::isnan(ez.z(1, 1)));
}

TEST_CASE("defined edge z-score series are centered") {
    auto acts = acts_from(testutil::random_matrix(4, 120, 73));
    auto tensor = build_dmnc(acts, 20, 4);
    auto ez = edge_zscores(tensor);
    for (Eigen::Index e = 0; e < ez.z.cols(); ++e) {
        double mean = 0.0;
        for (Eigen::Index t = 0; t < ez.z.rows(); ++t) mean += ez.z(t, e);
        mean /= static_cast<double>(ez.z.rows());
        CHECK(std::abs(mean) < 1e-12);
    }
}

TEST_CASE("global efficiency of the complete unit graph is one") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Ones(5, 5);
    CHECK(global_efficiency(c) == 1.0);
    Eigen::MatrixXd none = -Eigen::MatrixXd::Ones(4, 4);
    CHECK(global_efficiency(none) == 0.0);
}

TEST_CASE("global efficiency matches a Floyd-Warshall oracle") {
    std::mt19937_64 eng(79);
    std::uniform_real_distribution<double> unif(-0.5, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(5, 5);
        for (int i = 0; i < 5; ++i)
            for (int j = i + 1; j < 5; ++j) c(i, j) = c(j, i) = unif(eng);
        CHECK(global_efficiency(c) ==
              doctest::Approx(fincon::ref::global_efficiency_fw(c, false)).epsilon(1e-9));
    }
}

TEST_CASE("modularity of one community is zero and cliques score a half") {
    // Two disconnected triangles with unit weights.
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(6, 6);
    auto link = [&](int i, int j) { c(i, j) = c(j, i) = 1.0; };
    link(0, 1);
    link(0, 2);
    link(1, 2);
    link(3, 4);
    link(3, 5);
    link(4, 5);

    std::vector<int> one(6, 0);
    CHECK(modularity(c, one) == doctest::Approx(0.0).epsilon(1e-14));
    std::vector<int> split = {0, 0, 0, 1, 1, 1};
    CHECK(modularity(c, split) == doctest::Approx(0.5).epsilon(1e-9));

    // Brute force over all 6-node partitions confirms 0.5 is the maximum.
    auto [best_q, best_part] = fincon::ref::best_partition(c, false);
    CHECK(best_q == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(modularity(c, best_part) == doctest::Approx(best_q).epsilon(1e-12));

    Eigen::MatrixXd empty = -Eigen::MatrixXd::Ones(3, 3);
    CHECK_THROWS_AS(modularity(empty, std::vector<int>{0, 1, 2}), NoPositiveEdges);
}

TEST_CASE("modularity agrees with the naive double loop on random graphs") {
    std::mt19937_64 eng(83);
    std::uniform_real_distribution<double> unif(-0.5, 1.0);
    std::uniform_int_distribution<int> comm(0, 2);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j) c(i, j) = c(j, i) = unif(eng);
        std::vector<int> part(6);
        for (int& p : part) p = comm(eng);
        bool has_edge = false;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                if (i != j && c(i, j) > 0.0) has_edge = true;
        if (!has_edge) continue;
        CHECK(modularity(c, part) ==
              doctest::Approx(fincon::ref::modularity_naive(c, part, false)).epsilon(1e-12));
        CHECK(modularity(c, part) >= -0.5 - 1e-12);
        CHECK(modularity(c, part) <= 1.0 + 1e-12);
    }
}

TEST_CASE("community detection recovers a planted two-block structure") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            if (i == j) continue;
            const bool same = (i < 4) == (j < 4);
            c(i, j) = same ? 0.8 : 0.05;
        }
    auto part = detect_communities(c);
    REQUIRE(part.size() == 8);
    // Dense ids numbered by lowest member: block of node 0 gets id 0.
    for (int i = 0; i < 4; ++i) CHECK(part[i] == 0);
    for (int i = 4; i < 8; ++i) CHECK(part[i] == part[4]);
    CHECK(part[4] != 0);
}

TEST_CASE("absolute weighting counts negative correlations as edges") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j) c(i, j) = -1.0;
    // With only negative entries the default graph is empty; absolute
    // weighting sees the complete unit graph.
    CHECK(global_efficiency(c) == 0.0);
    CHECK(global_efficiency(c, true) == 1.0);
    CHECK_THROWS_AS(modularity(c, std::vector<int>{0, 0, 1, 1}), NoPositiveEdges);
    CHECK_NOTHROW(modularity(c, std::vector<int>{0, 0, 1, 1}, true));
}

TEST_CASE("two planted blobs are recovered by two-means") {
    std::mt19937_64 eng(89);
    std::normal_distribution<double> nd(0.0, 0.1);
    std::vector<Eigen::VectorXd> points;
    std::vector<int> truth;
    for (int t = 0; t < 60; ++t) {
        Eigen::VectorXd v(3);
        const int side = (t % 2 == 0) ? 1 : -1;
        v << 10.0 * side + nd(eng), nd(eng), nd(eng);
        points.push_back(v);
        truth.push_back(side > 0 ? 1 : 0);
    }
    auto res = kmeans(points, 2, 7, 4);
    REQUIRE(res.labels.size() == 60);
    // Perfect recovery up to label swap.
    int agree = 0;
    for (int t = 0; t < 60; ++t) agree += (res.labels[t] == truth[t]) ? 1 : 0;
    CHECK((agree == 0 || agree == 60));
}

TEST_CASE("degenerate k-means cases behave") {
    std::vector<Eigen::VectorXd> points;
    for (int t = 0; t < 7; ++t) {
        Eigen::VectorXd v(2);
        v << static_cast<double>(t), static_cast<double>(t % 3);
        points.push_back(v);
    }
    auto one = kmeans(points, 1, 3, 2);
    for (int l : one.labels) CHECK(l == 0);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    for (const auto& p : points) mean += p;
    mean /= 7.0;
    CHECK(testutil::max_abs_diff(one.centroids, mean.transpose()) < 1e-12);

    auto full = kmeans(points, 7, 3, 2);
    CHECK(full.inertia == doctest::Approx(0.0).epsilon(1e-14));

    CHECK_THROWS_AS(kmeans(points, 8, 3, 2), KTooLarge);
}

TEST_CASE("k-means is deterministic for a fixed seed") {
    auto pts_mat = testutil::random_matrix(40, 3, 91);
    std::vector<Eigen::VectorXd> points;
    for (int i = 0; i < 40; ++i) points.push_back(pts_mat.row(i).transpose());
    auto a = kmeans(points, 4, 123, 6);
    auto b = kmeans(points, 4, 123, 6);
    CHECK(a.labels == b.labels);
    CHECK(a.inertia == b.inertia);
    CHECK(a.best_restart == b.best_restart);
    CHECK((a.centroids.array() == b.centroids.array()).all());
}

TEST_CASE("cluster labels survive an orthogonal transform of the inputs") {
    std::mt19937_64 eng(97);
    std::normal_distribution<double> nd(0.0, 0.2);
    std::vector<Eigen::VectorXd> points;
    for (int t = 0; t < 50; ++t) {
        Eigen::VectorXd v(3);
        const double cx = (t % 2 == 0) ? 8.0 : -8.0;
        v << cx + nd(eng), nd(eng), nd(eng);
        points.push_back(v);
    }
    // A fixed rotation built from a QR factorization.
    Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(
                            testutil::random_matrix(3, 3, 98))
                            .householderQ();
    std::vector<Eigen::VectorXd> rotated;
    for (const auto& p : points) rotated.push_back(q * p);

    auto a = kmeans(points, 2, 5, 4);
    auto b = kmeans(rotated, 2, 5, 4);
    // Same partition up to label names.
    int same = 0, flip = 0;
    for (int t = 0; t < 50; ++t) {
        same += (a.labels[t] == b.labels[t]) ? 1 : 0;
        flip += (a.labels[t] != b.labels[t]) ? 1 : 0;
    }
    CHECK((same == 50 || flip == 50));
}

TEST_CASE("regime clustering on a planted tensor ties labels to timestamps") {
    Eigen::MatrixXd t1 = Eigen::MatrixXd::Identity(3, 3);
    t1(0, 1) = t1(1, 0) = 0.9;
    Eigen::MatrixXd t2 = Eigen::MatrixXd::Identity(3, 3);
    t2(0, 1) = t2(1, 0) = -0.9;
    auto truth = gen_regime_tensor({t1, t2}, {{0, 300}, {1, 300}}, 0.3, 617);
    auto tensor = build_dmnc(truth.activations, 30);
    auto labeling = cluster_regimes(tensor, 2, 11, 4);
    REQUIRE(labeling.labels.size() == static_cast<std::size_t>(tensor.size()));
    CHECK(labeling.timestamps == tensor.timestamps);
    auto window_truth = window_labels(truth.labels, 30);
    REQUIRE(window_truth.size() == labeling.labels.size());
    int agree = 0;
    for (std::size_t t = 0; t < window_truth.size(); ++t)
        agree += (labeling.labels[t] == window_truth[t]) ? 1 : 0;
    const double acc = std::max(agree, static_cast<int>(window_truth.size()) - agree) /
                       static_cast<double>(window_truth.size());
    CHECK(acc > 0.9);
}

TEST_CASE("collinear points embed on one axis with full variance") {
    std::vector<Eigen::VectorXd> points;
    Eigen::VectorXd dir(4);
    dir << 1.0, -2.0, 0.5, 3.0;
    for (int t = 0; t < 12; ++t) points.push_back(Eigen::VectorXd(t * 0.5 * dir));
    auto emb = pca_embed(points, 1);
    REQUIRE(emb.explained.size() == 1);
    CHECK(emb.explained(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(pca_embed(points, 2), RankDeficient);
}

TEST_CASE("an isotropic cloud splits variance roughly evenly") {
    std::mt19937_64 eng(101);
    std::normal_distribution<double> nd;
    std::vector<Eigen::VectorXd> points;
    for (int t = 0; t < 2000; ++t) {
        Eigen::VectorXd v(10);
        for (int i = 0; i < 10; ++i) v(i) = nd(eng);
        points.push_back(v);
    }
    auto emb = pca_embed(points, 2);
    const double got = emb.explained.sum();
    CHECK(got == doctest::Approx(0.2).epsilon(0.35));
}

TEST_CASE("embedding preserves distances for data already in the plane") {
    std::mt19937_64 eng(103);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(5, 2);
    basis(0, 0) = 1.0;
    basis(2, 1) = 1.0;
    std::vector<Eigen::VectorXd> points;
    for (int t = 0; t < 30; ++t) {
        Eigen::VectorXd uv(2);
        uv << nd(eng), nd(eng);
        points.push_back(basis * uv);
    }
    auto emb = pca_embed(points, 2);
    for (int s = 0; s < 30; ++s)
        for (int t = s + 1; t < 30; ++t) {
            const double orig = (points[s] - points[t]).norm();
            const double low = (emb.coords.row(s) - emb.coords.row(t)).norm();
            CHECK(low == doctest::Approx(orig).epsilon(1e-9));
        }
}

TEST_CASE("tensor directory round trip preserves slices and metadata") {
    testutil::TempDir tmp("tensor");
    auto acts = acts_from(testutil::random_matrix(3, 80, 107));
    // Plant a degenerate stretch so missing entries go through disk too.
    Eigen::MatrixXd vals = acts.values;
    vals.row(1).segment(10, 30).setConstant(3.3);
    auto flat = acts_from(vals);
    auto tensor = build_dmnc(flat, 20, 6, WindowFn::GAUSSIAN, 4.0);
    bool any_degenerate = false;
    for (const auto& d : tensor.degenerate_rows) any_degenerate |= !d.empty();
    REQUIRE(any_degenerate);

    write_tensor(tmp.path() / "t", tensor);
    auto back = read_tensor(tmp.path() / "t");
    CHECK(back.delta == tensor.delta);
    CHECK(back.stride == tensor.stride);
    CHECK(back.window_fn == tensor.window_fn);
    CHECK(back.gauss_sigma == tensor.gauss_sigma);
    CHECK(back.timestamps == tensor.timestamps);
    REQUIRE(back.size() == tensor.size());
    for (long t = 0; t < tensor.size(); ++t) {
        CHECK(back.degenerate_rows[t] == tensor.degenerate_rows[t]);
        const auto& a = tensor.slices[t];
        const auto& b = back.slices[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                if (std::isnan(a(i, j)))
                    CHECK(std::isnan(b(i, j)));
                else
                    CHECK(a(i, j) == b(i, j));
            }
    }
}
