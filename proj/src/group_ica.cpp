#include "fincon/group_ica.hpp"

#include <cmath>

#include "fincon/csv.hpp"
#include "fincon/errors.hpp"
#include "fincon/ica.hpp"

namespace fincon {

std::vector<std::string> default_component_labels(int k) {
    std::vector<std::string> out;
    for (int i = 1; i <= k; ++i) out.push_back("IC" + std::to_string(i));
    return out;
}

namespace {

PseudoSubjectStack slice_stack(const AssetPanel& panel, int w, int stride, bool summarize) {
    const auto T = panel.values.rows();
    const auto N = panel.values.cols();
    if (w < 1) throw Precondition("pseudo subjects: window length must be >= 1");
    if (stride < 1) throw Precondition("pseudo subjects: stride must be >= 1");
    if (w > T)
        throw WindowTooLong("pseudo subjects: window " + std::to_string(w) +
                            " exceeds panel length " + std::to_string(T));

    PseudoSubjectStack out;
    out.w_len = summarize ? 1 : w;
    out.stride = stride;
    out.asset_order = panel.assets;
    const long count = (static_cast<long>(T) - w) / stride + 1;
    out.windows.resize(count);
    out.start_indices.resize(count);
    out.window_labels.resize(count);
    for (long t = 0; t < count; ++t) {
        const long start = t * stride;
        out.start_indices[t] = start;
        const long last = start + w - 1;
        out.window_labels[t] = panel.dates.empty() ? std::to_string(last)
                                                   : to_string(panel.dates[last]);
        Eigen::MatrixXd slice =
            panel.values.block(start, 0, w, N).transpose();  // N x w
        if (summarize)
            out.windows[t] = slice.rowwise().mean();
        else
            out.windows[t] = std::move(slice);
    }
    return out;
}

}  // namespace

PseudoSubjectStack build_pseudo_subjects(const AssetPanel& panel, int w, int stride) {
    return slice_stack(panel, w, stride, false);
}

PseudoSubjectStack build_summary_stack(const AssetPanel& panel, int w, int stride) {
    return slice_stack(panel, w, stride, true);
}

GroupDecomposition group_decompose(const PseudoSubjectStack& stack, int subject_rank,
                                   int group_rank, int k, std::uint64_t seed,
                                   double tol, int max_iter) {
    const long n_win = static_cast<long>(stack.windows.size());
    if (n_win == 0) throw EmptyInput("group_decompose: empty stack");
    const auto N = stack.windows[0].rows();
    const auto w = stack.windows[0].cols();
    if (k < 1 || k > group_rank)
        throw Precondition("group_decompose: need 1 <= k <= group_rank");
    if (group_rank > subject_rank)
        throw Precondition("group_decompose: group_rank cannot exceed subject_rank");
    if (subject_rank > std::min<Eigen::Index>(N, w - 1))
        throw Precondition("group_decompose: subject_rank must be <= min(assets, w-1)");

    // Step 1: whiten every window to subject_rank rows.  Windows are
    // independent, so this runs in parallel with one output slot each.
    std::vector<WhiteningResult> whitenings(n_win);
    std::vector<Eigen::MatrixXd> reduced(n_win);
    std::exception_ptr fail;
#pragma omp parallel for schedule(static)
    for (long t = 0; t < n_win; ++t) {
        try {
            whitenings[t] = pca_whiten(stack.windows[t], subject_rank);
            reduced[t] = whitenings[t].apply(stack.windows[t]);
        } catch (...) {
#pragma omp critical
            if (!fail) fail = std::current_exception();
        }
    }
    if (fail) std::rethrow_exception(fail);

    // Step 2: concatenate along the sample axis.
    Eigen::MatrixXd concat(subject_rank, n_win * w);
    for (long t = 0; t < n_win; ++t)
        concat.block(0, t * w, subject_rank, w) = reduced[t];

    // Steps 3 and 4: group whitening, then ICA.
    const WhiteningResult group_wh = pca_whiten(concat, group_rank);
    const Eigen::MatrixXd z = group_wh.apply(concat);
    const UnmixingMatrix um = ica_fixed_point(z, k, tol, max_iter, seed);

    // Step 5: the mixing pattern in group-whitened space is um.rows^T
    // (orthonormal rows).  Dewhitening it through the group stage and then
    // through every window stage yields one asset-space pattern per window;
    // the consensus map is their mean, row-normalized.
    const Eigen::MatrixXd mix_reduced =
        group_wh.inverse * um.rows.transpose();  // subject_rank x k
    Eigen::MatrixXd mean_pattern = Eigen::MatrixXd::Zero(N, k);
    for (long t = 0; t < n_win; ++t)
        mean_pattern += whitenings[t].inverse * mix_reduced;
    mean_pattern /= static_cast<double>(n_win);

    GroupDecomposition out;
    out.map.loadings = mean_pattern.transpose();
    for (int i = 0; i < k; ++i) {
        const double norm = out.map.loadings.row(i).norm();
        if (norm > 0.0) out.map.loadings.row(i) /= norm;
    }
    out.map.asset_order = stack.asset_order;
    out.map.component_order = default_component_labels(k);
    out.map.window_len = static_cast<int>(w);
    out.map.k_ica = k;

    out.activations.values.resize(k, n_win);
    out.activations.component_order = out.map.component_order;
    out.activations.window_labels = stack.window_labels;
#pragma omp parallel for schedule(static)
    for (long t = 0; t < n_win; ++t) {
        const BackReconstruction br = back_reconstruct(out.map, stack.windows[t]);
        out.activations.values.col(t) = br.activation;
    }
    return out;
}

BackReconstruction back_reconstruct(const ComponentMap& map, const Eigen::MatrixXd& window) {
    if (window.rows() != map.loadings.cols())
        throw DimensionMismatch("back_reconstruct: window has " +
                                std::to_string(window.rows()) + " assets, map has " +
                                std::to_string(map.loadings.cols()));
    BackReconstruction out;
    out.time_course = map.loadings * window;
    out.activation = out.time_course.rowwise().mean();
    return out;
}

BackReconstruction back_reconstruct(const ComponentMap& map, const Eigen::MatrixXd& window,
                                    const std::vector<std::string>& window_asset_order) {
    if (window_asset_order != map.asset_order)
        throw AssetOrderMismatch("back_reconstruct: window asset order differs from map");
    return back_reconstruct(map, window);
}

void write_component_map(const std::filesystem::path& path, const ComponentMap& map) {
    std::vector<std::string> lines;
    std::string header = "component,iq";
    for (const auto& a : map.asset_order) header += "," + a;
    lines.push_back(header);
    for (Eigen::Index i = 0; i < map.loadings.rows(); ++i) {
        std::string row = map.component_order[i];
        row += ",";
        row += (map.iq.size() > i) ? format_cell(map.iq(i)) : "";
        for (Eigen::Index j = 0; j < map.loadings.cols(); ++j)
            row += "," + format_cell(map.loadings(i, j));
        lines.push_back(std::move(row));
    }
    write_lines(path, lines);

    auto meta = path;
    meta.replace_extension(".meta");
    write_kv(meta, {
                       {"window_len", std::to_string(map.window_len)},
                       {"k_ica", std::to_string(map.k_ica)},
                   });
}

ComponentMap read_component_map(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.size() < 2) throw EmptyInput("component map file " + path.string());
    auto header = split_csv_line(lines[0]);
    if (header.size() < 3 || header[0] != "component" || header[1] != "iq")
        throw MalformedRow("bad component map header in " + path.string());

    ComponentMap map;
    map.asset_order.assign(header.begin() + 2, header.end());
    const auto N = static_cast<Eigen::Index>(map.asset_order.size());
    std::vector<std::vector<double>> rows;
    std::vector<double> iqs;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto cells = split_csv_line(lines[i]);
        if (static_cast<Eigen::Index>(cells.size()) != N + 2)
            throw MalformedRow("bad component map row in " + path.string());
        map.component_order.push_back(cells[0]);
        iqs.push_back(parse_cell(cells[1]));
        std::vector<double> row(N);
        for (Eigen::Index j = 0; j < N; ++j) row[j] = parse_cell(cells[j + 2]);
        rows.push_back(std::move(row));
    }
    const auto K = static_cast<Eigen::Index>(rows.size());
    map.loadings.resize(K, N);
    bool any_iq = false;
    for (Eigen::Index i = 0; i < K; ++i) {
        for (Eigen::Index j = 0; j < N; ++j) map.loadings(i, j) = rows[i][j];
        if (!std::isnan(iqs[i])) any_iq = true;
    }
    if (any_iq) {
        map.iq.resize(K);
        for (Eigen::Index i = 0; i < K; ++i) map.iq(i) = iqs[i];
    }
    map.k_ica = static_cast<int>(K);

    auto meta = path;
    meta.replace_extension(".meta");
    if (std::filesystem::exists(meta)) {
        for (const auto& [k, v] : read_kv(meta)) {
            if (k == "window_len") map.window_len = std::stoi(v);
            if (k == "k_ica") map.k_ica = std::stoi(v);
        }
    }
    return map;
}

void write_activations(const std::filesystem::path& path, const ActivationMatrix& acts) {
    std::vector<std::string> lines;
    std::string header = "window";
    for (const auto& c : acts.component_order) header += "," + c;
    lines.push_back(header);
    for (Eigen::Index t = 0; t < acts.values.cols(); ++t) {
        std::string row = acts.window_labels[t];
        for (Eigen::Index i = 0; i < acts.values.rows(); ++i)
            row += "," + format_cell(acts.values(i, t));
        lines.push_back(std::move(row));
    }
    write_lines(path, lines);
}

ActivationMatrix read_activations(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.size() < 2) throw EmptyInput("activations file " + path.string());
    auto header = split_csv_line(lines[0]);
    if (header.size() < 2 || header[0] != "window")
        throw MalformedRow("bad activations header in " + path.string());

    ActivationMatrix acts;
    acts.component_order.assign(header.begin() + 1, header.end());
    const auto K = static_cast<Eigen::Index>(acts.component_order.size());
    std::vector<std::vector<double>> cols;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto cells = split_csv_line(lines[i]);
        if (static_cast<Eigen::Index>(cells.size()) != K + 1)
            throw MalformedRow("bad activations row in " + path.string());
        acts.window_labels.push_back(cells[0]);
        std::vector<double> col(K);
        for (Eigen::Index j = 0; j < K; ++j) col[j] = parse_cell(cells[j + 1]);
        cols.push_back(std::move(col));
    }
    acts.values.resize(K, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t t = 0; t < cols.size(); ++t)
        for (Eigen::Index j = 0; j < K; ++j)
            acts.values(j, static_cast<Eigen::Index>(t)) = cols[t][j];
    return acts;
}

}  // namespace fincon
