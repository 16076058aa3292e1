#include "fincon/dmnc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fincon/csv.hpp"
#include "fincon/errors.hpp"
#include "fincon/stats.hpp"

namespace fincon {

std::string to_string(WindowFn f) {
    return f == WindowFn::RECT ? "RECT" : "GAUSSIAN";
}

WindowFn window_fn_from_string(const std::string& s) {
    if (s == "RECT") return WindowFn::RECT;
    if (s == "GAUSSIAN") return WindowFn::GAUSSIAN;
    throw ConfigError("unknown window function '" + s + "'");
}

Eigen::VectorXd gaussian_window(int delta, double sigma) {
    if (delta < 1) throw Precondition("gaussian_window: delta must be >= 1");
    if (sigma <= 0.0) throw Precondition("gaussian_window: sigma must be positive");
    Eigen::VectorXd w(delta);
    const double mu = (delta - 1) / 2.0;
    for (int s = 0; s < delta; ++s)
        w(s) = std::exp(-(s - mu) * (s - mu) / (2.0 * sigma * sigma));
    return w;
}

WindowCorrelation window_correlation(const Eigen::MatrixXd& slice,
                                     const Eigen::VectorXd& weights) {
    const auto k = slice.rows();
    const auto n = slice.cols();
    if (k < 1 || n < 2)
        throw Precondition("window_correlation: need >= 1 row and >= 2 samples");
    Eigen::VectorXd w;
    if (weights.size() == 0) {
        w = Eigen::VectorXd::Ones(n);
    } else {
        if (weights.size() != n)
            throw DimensionMismatch("window_correlation: weight length differs from samples");
        if (weights.minCoeff() < 0.0 || weights.sum() <= 0.0)
            throw Precondition("window_correlation: weights must be >= 0 with positive sum");
        w = weights;
    }
    const double wsum = w.sum();

    WindowCorrelation out;
    out.corr = Eigen::MatrixXd::Identity(k, k);

    Eigen::VectorXd mean(k), sd(k);
    std::vector<char> degenerate(k, 0);
    for (Eigen::Index i = 0; i < k; ++i) {
        mean(i) = slice.row(i).dot(w) / wsum;
        const Eigen::ArrayXd d = slice.row(i).transpose().array() - mean(i);
        sd(i) = std::sqrt((d.square() * w.array()).sum() / wsum);
        const double range = slice.row(i).maxCoeff() - slice.row(i).minCoeff();
        if (range == 0.0 || sd(i) == 0.0) {
            degenerate[i] = 1;
            out.degenerate_rows.push_back(static_cast<int>(i));
            out.flagged = true;
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = i + 1; j < k; ++j) {
            double r;
            if (degenerate[i] || degenerate[j]) {
                r = nan;
            } else {
                const Eigen::ArrayXd di = slice.row(i).transpose().array() - mean(i);
                const Eigen::ArrayXd dj = slice.row(j).transpose().array() - mean(j);
                const double cov = (di * dj * w.array()).sum() / wsum;
                r = std::clamp(cov / (sd(i) * sd(j)), -1.0, 1.0);
            }
            out.corr(i, j) = r;
            out.corr(j, i) = r;
        }
    }
    return out;
}

DmncTensor build_dmnc(const ActivationMatrix& acts, int delta, int stride,
                      WindowFn fn, double gauss_sigma) {
    const auto T = acts.values.cols();
    if (delta < 2) throw Precondition("build_dmnc: delta must be >= 2");
    if (stride < 1) throw Precondition("build_dmnc: stride must be >= 1");
    if (delta > T)
        throw WindowTooLong("build_dmnc: delta " + std::to_string(delta) +
                            " exceeds series length " + std::to_string(T));

    DmncTensor tensor;
    tensor.delta = delta;
    tensor.stride = stride;
    tensor.window_fn = fn;
    tensor.gauss_sigma = (fn == WindowFn::GAUSSIAN) ? gauss_sigma : 0.0;
    Eigen::VectorXd weights;
    if (fn == WindowFn::GAUSSIAN) weights = gaussian_window(delta, gauss_sigma);

    const long count = (static_cast<long>(T) - delta) / stride + 1;
    tensor.slices.resize(count);
    tensor.timestamps.resize(count);
    tensor.degenerate_rows.resize(count);
#pragma omp parallel for schedule(static)
    for (long t = 0; t < count; ++t) {
        const long start = t * stride;
        const WindowCorrelation wc =
            window_correlation(acts.values.middleCols(start, delta), weights);
        tensor.slices[t] = wc.corr;
        tensor.degenerate_rows[t] = wc.degenerate_rows;
        const long last = start + delta - 1;
        tensor.timestamps[t] = acts.window_labels.empty()
                                   ? std::to_string(last)
                                   : acts.window_labels[last];
    }
    return tensor;
}

DmncTensor build_node_dmnc(const PseudoSubjectStack& stack, const std::vector<long>& order) {
    if (stack.windows.empty()) throw EmptyInput("build_node_dmnc: empty stack");
    std::vector<long> ix = order;
    if (ix.empty()) {
        ix.resize(stack.windows.size());
        std::iota(ix.begin(), ix.end(), 0);
    }
    for (long i : ix)
        if (i < 0 || i >= static_cast<long>(stack.windows.size()))
            throw Precondition("build_node_dmnc: order index out of range");

    DmncTensor tensor;
    tensor.delta = stack.w_len;
    tensor.stride = stack.stride;
    tensor.window_fn = WindowFn::RECT;
    const long count = static_cast<long>(ix.size());
    tensor.slices.resize(count);
    tensor.timestamps.resize(count);
    tensor.degenerate_rows.resize(count);
#pragma omp parallel for schedule(static)
    for (long t = 0; t < count; ++t) {
        const WindowCorrelation wc = window_correlation(stack.windows[ix[t]]);
        tensor.slices[t] = wc.corr;
        tensor.degenerate_rows[t] = wc.degenerate_rows;
        tensor.timestamps[t] = stack.window_labels[ix[t]];
    }
    return tensor;
}

ActivationMatrix smooth_activations(const ActivationMatrix& acts, SmoothKind kind,
                                    double param) {
    const auto K = acts.values.rows();
    const auto T = acts.values.cols();
    ActivationMatrix out = acts;
    switch (kind) {
        case SmoothKind::MOVING_AVG: {
            const int n = static_cast<int>(param);
            if (n < 1) throw Precondition("smooth: moving average span must be >= 1");
            for (Eigen::Index i = 0; i < K; ++i) {
                for (Eigen::Index t = 0; t < T; ++t) {
                    const Eigen::Index lo = std::max<Eigen::Index>(0, t - n + 1);
                    out.values(i, t) = acts.values.row(i).segment(lo, t - lo + 1).mean();
                }
            }
            break;
        }
        case SmoothKind::EXP: {
            if (param <= 0.0 || param > 1.0)
                throw Precondition("smooth: alpha must be in (0, 1]");
            for (Eigen::Index i = 0; i < K; ++i) {
                out.values(i, 0) = acts.values(i, 0);
                for (Eigen::Index t = 1; t < T; ++t)
                    out.values(i, t) =
                        param * acts.values(i, t) + (1.0 - param) * out.values(i, t - 1);
            }
            break;
        }
        case SmoothKind::ZSCORE: {
            for (Eigen::Index i = 0; i < K; ++i) {
                const double m = acts.values.row(i).mean();
                const double sd = std::sqrt(sample_variance(acts.values.row(i).transpose()));
                if (sd <= 0.0)
                    throw DegenerateRow("smooth: component row " + std::to_string(i) +
                                        " is constant, cannot z-score");
                out.values.row(i) = (acts.values.row(i).array() - m) / sd;
            }
            break;
        }
    }
    return out;
}

std::vector<long> order_windows(const std::vector<double>& z_on,
                                const std::vector<double>& z_off) {
    if (z_on.size() != z_off.size())
        throw LengthMismatch("order_windows: coordinate series differ in length");
    std::vector<long> ix(z_on.size());
    std::iota(ix.begin(), ix.end(), 0);
    std::stable_sort(ix.begin(), ix.end(), [&](long a, long b) {
        if (z_on[a] != z_on[b]) return z_on[a] < z_on[b];
        return z_off[a] < z_off[b];
    });
    return ix;
}

std::vector<std::pair<int, int>> upper_pairs(int k) {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) out.emplace_back(i, j);
    return out;
}

Eigen::VectorXd vectorize_upper(const Eigen::MatrixXd& c) {
    const auto k = c.rows();
    if (c.cols() != k) throw Precondition("vectorize_upper: matrix must be square");
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-8)
        throw AsymmetricInput("vectorize_upper: matrix is not symmetric");
    Eigen::VectorXd v(k * (k - 1) / 2);
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = i + 1; j < k; ++j) v(n++) = c(i, j);
    return v;
}

Eigen::MatrixXd devectorize_upper(const Eigen::VectorXd& v, int k) {
    if (v.size() != static_cast<Eigen::Index>(k) * (k - 1) / 2)
        throw DimensionMismatch("devectorize_upper: length does not match k");
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(k, k);
    Eigen::Index n = 0;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
            c(i, j) = v(n);
            c(j, i) = v(n);
            ++n;
        }
    return c;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size())
        throw DimensionMismatch("cosine_similarity: lengths differ");
    const double na = a.norm(), nb = b.norm();
    if (na <= 0.0 || nb <= 0.0)
        throw ZeroVector("cosine_similarity: zero-norm vector");
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double frobenius_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionMismatch("frobenius_distance: shapes differ");
    return (a - b).norm();
}

std::vector<double> similarity_jump(const DmncTensor& tensor) {
    const long L = tensor.size();
    if (L < 2) throw Precondition("similarity_jump: need at least 2 slices");
    std::vector<double> out(L - 1);
#pragma omp parallel for schedule(static)
    for (long t = 1; t < L; ++t)
        out[t - 1] = 1.0 - cosine_similarity(vectorize_upper(tensor.slices[t]),
                                             vectorize_upper(tensor.slices[t - 1]));
    return out;
}

std::vector<double> distance_to_baseline(const DmncTensor& tensor, long baseline_start,
                                         long baseline_end) {
    const long L = tensor.size();
    if (baseline_start < 0 || baseline_end > L || baseline_start >= baseline_end)
        throw Precondition("distance_to_baseline: bad baseline range");
    const int k = tensor.k();
    const long dim = static_cast<long>(k) * (k - 1) / 2;
    const long nb = baseline_end - baseline_start;
    if (nb < dim + 2)
        throw Precondition("distance_to_baseline: baseline needs >= dim+2 slices, has " +
                           std::to_string(nb));

    Eigen::MatrixXd base(dim, nb);
    for (long t = 0; t < nb; ++t)
        base.col(t) = vectorize_upper(tensor.slices[baseline_start + t]);
    const Eigen::VectorXd mu = base.rowwise().mean();
    const Eigen::MatrixXd centered = base.colwise() - mu;
    Eigen::MatrixXd sigma =
        centered * centered.transpose() / static_cast<double>(nb - 1);
    const double lambda = 1e-3 * sigma.trace() / static_cast<double>(dim);
    sigma.diagonal().array() += lambda;

    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw SingularCovariance("distance_to_baseline: shrunk covariance is singular");

    std::vector<double> out(L);
#pragma omp parallel for schedule(static)
    for (long t = 0; t < L; ++t) {
        const Eigen::VectorXd d = vectorize_upper(tensor.slices[t]) - mu;
        out[t] = std::sqrt(d.dot(llt.solve(d)));
    }
    return out;
}

VolatilitySeries structural_volatility(const DmncTensor& tensor, int tau) {
    const long L = tensor.size();
    if (tau < 2) throw Precondition("structural_volatility: tau must be >= 2");
    if (tau > L)
        throw Precondition("structural_volatility: tau exceeds tensor length");
    const int k = tensor.k();

    VolatilitySeries out;
    out.start = tau - 1;
    out.values.resize(L - tau + 1);
    // Population variance of every entry over the trailing tau slices; the
    // normalizer is K^2 even though the diagonal never varies.
#pragma omp parallel for schedule(static)
    for (long t = tau - 1; t < L; ++t) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                double mean = 0.0;
                for (int s = 0; s < tau; ++s) mean += tensor.slices[t - s](i, j);
                mean /= tau;
                double var = 0.0;
                for (int s = 0; s < tau; ++s) {
                    const double d = tensor.slices[t - s](i, j) - mean;
                    var += d * d;
                }
                acc += var / tau;
            }
        }
        out.values[t - tau + 1] = acc / static_cast<double>(k * k);
    }
    return out;
}

EdgeZScores edge_zscores(const DmncTensor& tensor) {
    const long L = tensor.size();
    if (L < 2) throw Precondition("edge_zscores: need at least 2 slices");
    const int k = tensor.k();
    EdgeZScores out;
    out.edges = upper_pairs(k);
    const auto ne = static_cast<Eigen::Index>(out.edges.size());
    out.z.resize(L, ne);
    const double nan = std::numeric_limits<double>::quiet_NaN();
#pragma omp parallel for schedule(static)
    for (Eigen::Index e = 0; e < ne; ++e) {
        const auto [i, j] = out.edges[e];
        Eigen::VectorXd series(L);
        for (long t = 0; t < L; ++t) series(t) = tensor.slices[t](i, j);
        const double m = series.mean();
        const double sd = std::sqrt(sample_variance(series));
        if (sd <= 0.0) {
            out.z.col(e).setConstant(nan);
        } else {
            out.z.col(e) = (series.array() - m) / sd;
        }
    }
    return out;
}

RegimeLabeling cluster_regimes(const DmncTensor& tensor, int k, std::uint64_t seed,
                               int restarts) {
    std::vector<Eigen::VectorXd> vs(tensor.size());
    for (long t = 0; t < tensor.size(); ++t) vs[t] = vectorize_upper(tensor.slices[t]);
    const KMeansResult km = kmeans(vs, k, seed, restarts);
    RegimeLabeling out;
    out.labels = km.labels;
    out.timestamps = tensor.timestamps;
    out.centroids = km.centroids;
    out.inertia = km.inertia;
    return out;
}

Embedding pca_embed(const std::vector<Eigen::VectorXd>& vectors, int dims) {
    const auto n = static_cast<Eigen::Index>(vectors.size());
    if (n < 2) throw Precondition("pca_embed: need at least 2 vectors");
    const auto d = vectors[0].size();
    if (dims < 1 || dims > d)
        throw Precondition("pca_embed: dims must be in [1, vector dimension]");
    Eigen::MatrixXd x(d, n);
    for (Eigen::Index i = 0; i < n; ++i) x.col(i) = vectors[i];
    const Eigen::VectorXd mean = x.rowwise().mean();
    x.colwise() -= mean;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
    const Eigen::VectorXd s = svd.singularValues();
    const double cutoff =
        s(0) * std::max(d, n) * std::numeric_limits<double>::epsilon();
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff) ++rank;
    if (rank < dims)
        throw RankDeficient("pca_embed: cloud rank " + std::to_string(rank) +
                            " below requested dims " + std::to_string(dims));

    Embedding out;
    out.coords = (svd.matrixU().leftCols(dims).transpose() * x).transpose();
    const double total = s.array().square().sum();
    out.explained = s.head(dims).array().square() / total;
    return out;
}

void write_tensor(const std::filesystem::path& dir, const DmncTensor& tensor) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["delta"] = tensor.delta;
    manifest["stride"] = tensor.stride;
    manifest["window_fn"] = to_string(tensor.window_fn);
    manifest["gauss_sigma"] = tensor.gauss_sigma;
    manifest["n_slices"] = tensor.size();
    manifest["k"] = tensor.k();
    manifest["timestamps"] = tensor.timestamps;
    manifest["conventions"] = {
        {"edge_zscores", "sample variance"},
        {"structural_volatility", "population variance"},
    };
    nlohmann::json degenerate = nlohmann::json::array();
    for (const auto& rows : tensor.degenerate_rows) degenerate.push_back(rows);
    manifest["degenerate_rows"] = degenerate;
    write_lines(dir / "manifest.json", {manifest.dump(2)});

    char name[32];
    for (long t = 0; t < tensor.size(); ++t) {
        std::snprintf(name, sizeof(name), "window_%06ld.csv", t);
        write_matrix_csv(dir / name, tensor.slices[t]);
    }
}

DmncTensor read_tensor(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    const auto lines = read_lines(manifest_path);
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    nlohmann::json manifest = nlohmann::json::parse(text);

    DmncTensor tensor;
    tensor.delta = manifest.at("delta").get<int>();
    tensor.stride = manifest.at("stride").get<int>();
    tensor.window_fn = window_fn_from_string(manifest.at("window_fn").get<std::string>());
    tensor.gauss_sigma = manifest.at("gauss_sigma").get<double>();
    tensor.timestamps = manifest.at("timestamps").get<std::vector<std::string>>();
    if (manifest.contains("degenerate_rows"))
        tensor.degenerate_rows =
            manifest.at("degenerate_rows").get<std::vector<std::vector<int>>>();

    const long n = manifest.at("n_slices").get<long>();
    tensor.slices.resize(n);
    char name[32];
    for (long t = 0; t < n; ++t) {
        std::snprintf(name, sizeof(name), "window_%06ld.csv", t);
        tensor.slices[t] = read_matrix_csv(dir / name);
    }
    if (tensor.degenerate_rows.empty()) tensor.degenerate_rows.resize(n);
    return tensor;
}

}  // namespace fincon
