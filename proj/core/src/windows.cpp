#include "deeptrend/windows.hpp"

#include "deeptrend/series.hpp"

namespace deeptrend {

Matrix WindowedDataset::input_matrix(std::size_t sample) const {
    Matrix m(window, features);
    const auto src = input(sample);
    std::copy(src.begin(), src.end(), m.values().begin());
    return m;
}

WindowedDataset WindowedDataset::select_targets(std::size_t begin, std::size_t end) const {
    WindowedDataset out;
    out.window = window;
    out.features = features;
    out.target_size = target_size;
    for (std::size_t s = 0; s < size(); ++s) {
        if (target_index[s] < begin || target_index[s] >= end) continue;
        const auto in = input(s);
        const auto tg = target(s);
        out.inputs.insert(out.inputs.end(), in.begin(), in.end());
        out.targets.insert(out.targets.end(), tg.begin(), tg.end());
        out.target_index.push_back(target_index[s]);
    }
    return out;
}

WindowedDataset make_windows(const std::vector<std::span<const double>>& features,
                             const std::vector<std::span<const double>>& targets,
                             std::size_t window) {
    if (features.empty() || targets.empty()) {
        throw DataError("make_windows: need at least one feature and one target series");
    }
    if (window == 0) {
        throw DataError("make_windows: window length must be positive");
    }
    const std::size_t length = features.front().size();
    for (const auto& s : features) {
        if (s.size() != length) {
            throw DataError("make_windows: feature series lengths differ (" +
                            std::to_string(length) + " vs " + std::to_string(s.size()) + ")");
        }
    }
    for (const auto& s : targets) {
        if (s.size() != length) {
            throw DataError("make_windows: target series length " + std::to_string(s.size()) +
                            " differs from feature length " + std::to_string(length));
        }
    }
    if (length <= window) {
        throw DataError("make_windows: series length " + std::to_string(length) +
                        " must exceed the window " + std::to_string(window));
    }

    WindowedDataset data;
    data.window = window;
    data.features = features.size();
    data.target_size = targets.size();
    const std::size_t samples = length - window;
    data.inputs.reserve(samples * window * features.size());
    data.targets.reserve(samples * targets.size());
    data.target_index.reserve(samples);
    for (std::size_t t = window - 1; t + 1 < length; ++t) {
        for (std::size_t step = t + 1 - window; step <= t; ++step) {
            for (const auto& f : features) {
                data.inputs.push_back(f[step]);
            }
        }
        for (const auto& g : targets) {
            data.targets.push_back(g[t + 1]);
        }
        data.target_index.push_back(t + 1);
    }
    return data;
}

} // namespace deeptrend
