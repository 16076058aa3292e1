// Times the parallel kernels against their straight-line serial
// counterparts and cross-checks the numbers.  Speedup depends on the
// machine; agreement does not, so any deviation beyond tolerance fails the
// run.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "fincon/dmnc.hpp"
#include "fincon/factors.hpp"
#include "fincon/group_ica.hpp"
#include "fincon/market_data.hpp"
#include "fincon/parallel.hpp"
#include "fincon/ref/serial_ref.hpp"
#include "fincon/rng.hpp"

using namespace fincon;

namespace {

double time_ms(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

double dev(double a, double b) {
    if (std::isnan(a) && std::isnan(b)) return 0.0;
    return std::abs(a - b);
}

int failures = 0;

void report(const char* name, double serial_ms, double parallel_ms, double max_dev,
            double tol) {
    const bool ok = max_dev <= tol;
    if (!ok) ++failures;
    std::printf("%-24s serial %9.2f ms   parallel %9.2f ms   x%5.2f   max|dev| %.3e %s\n",
                name, serial_ms, parallel_ms,
                parallel_ms > 0 ? serial_ms / parallel_ms : 0.0, max_dev,
                ok ? "" : "EXCEEDS TOLERANCE");
}

ActivationMatrix random_activations(int k, long t, std::uint64_t seed) {
    ActivationMatrix acts;
    acts.values.resize(k, t);
    Rng rng(seed);
    for (long c = 0; c < t; ++c) {
        for (int r = 0; r < k; ++r) acts.values(r, c) = rng.normal();
        acts.window_labels.push_back("w" + std::to_string(c));
    }
    acts.component_order = default_component_labels(k);
    return acts;
}

}  // namespace

int main() {
    std::printf("threads available: %d\n\n", max_threads());

    {
        const ActivationMatrix acts = random_activations(8, 3000, 7);
        DmncTensor fast, slow;
        const double pms = time_ms([&] { fast = build_dmnc(acts, 45, 1); });
        const double sms = time_ms([&] { slow = ref::build_dmnc_slicewise(acts, 45, 1); });
        double d = 0.0;
        for (long t = 0; t < fast.size(); ++t)
            for (int i = 0; i < fast.k(); ++i)
                for (int j = 0; j < fast.k(); ++j)
                    d = std::max(d, dev(fast.slices[t](i, j), slow.slices[t](i, j)));
        report("build_dmnc", sms, pms, d, 1e-10);

        DmncTensor gfast, gslow;
        const double gpms =
            time_ms([&] { gfast = build_dmnc(acts, 45, 1, WindowFn::GAUSSIAN, 7.5); });
        const double gsms = time_ms(
            [&] { gslow = ref::build_dmnc_slicewise(acts, 45, 1, WindowFn::GAUSSIAN, 7.5); });
        double gd = 0.0;
        for (long t = 0; t < gfast.size(); ++t)
            for (int i = 0; i < gfast.k(); ++i)
                for (int j = 0; j < gfast.k(); ++j)
                    gd = std::max(gd, dev(gfast.slices[t](i, j), gslow.slices[t](i, j)));
        report("build_dmnc gaussian", gsms, gpms, gd, 1e-10);

        VolatilitySeries vfast, vslow;
        const double vpms = time_ms([&] { vfast = structural_volatility(fast, 20); });
        const double vsms =
            time_ms([&] { vslow = ref::structural_volatility_naive(fast, 20); });
        double vd = 0.0;
        for (std::size_t i = 0; i < vfast.values.size(); ++i)
            vd = std::max(vd, dev(vfast.values[i], vslow.values[i]));
        report("structural_volatility", vsms, vpms, vd, 1e-12);
    }

    {
        Rng rng(11);
        const long T = 20000;
        std::vector<double> x(T), y(T);
        for (long t = 0; t < T; ++t) {
            x[t] = rng.normal();
            y[t] = 0.5 * x[t] + rng.normal();
        }
        std::vector<double> fast, slow;
        const double pms = time_ms([&] { fast = rolling_pearson(x, y, 252); });
        const double sms = time_ms([&] { slow = ref::rolling_pearson_naive(x, y, 252); });
        double d = 0.0;
        for (long t = 0; t < T; ++t) d = std::max(d, dev(fast[t], slow[t]));
        report("rolling_pearson", sms, pms, d, 1e-12);
    }

    {
        Rng rng(13);
        const long T = 2500;
        const int K = 100;
        AssetPanel prices, volume;
        prices.values.resize(T, K);
        volume.values.resize(T, K);
        Date d{2005, 1, 3};
        for (long t = 0; t < T; ++t) {
            prices.dates.push_back(d);
            d = next_day(d);
            for (int j = 0; j < K; ++j) {
                prices.values(t, j) = 100.0 * std::exp(0.02 * rng.normal());
                volume.values(t, j) = 1e6 * (0.5 + rng.uniform());
            }
        }
        volume.dates = prices.dates;
        for (int j = 0; j < K; ++j) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "A%02d", j);
            prices.assets.push_back(buf);
        }
        volume.assets = prices.assets;

        AssetPanel fast, slow;
        const double pms =
            time_ms([&] { fast = build_feature_panel(prices, volume, FeatureKind::VWAP, 60); });
        const double sms = time_ms(
            [&] { slow = ref::feature_panel_serial(prices, volume, FeatureKind::VWAP, 60); });
        double d = 0.0;
        for (long t = 0; t < fast.values.rows(); ++t)
            for (int j = 0; j < K; ++j) d = std::max(d, dev(fast.values(t, j), slow.values(t, j)));
        report("feature_panel vwap", sms, pms, d, 0.0);
    }

    if (failures) {
        std::printf("\n%d kernel(s) disagree with the reference\n", failures);
        return 1;
    }
    std::printf("\nall kernels agree with the reference\n");
    return 0;
}
