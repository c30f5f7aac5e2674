#pragma once

#include "deeptrend/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace deeptrend {

/// Supervised pairs built from aligned series: an N-step window of F
/// features and the next-step value of each target series.
struct WindowedDataset {
    std::size_t window = 0;
    std::size_t features = 0;
    std::size_t target_size = 0;
    std::vector<double> inputs;  // sample-major, then step, then feature
    std::vector<double> targets; // sample-major
    std::vector<std::size_t> target_index; // position of each target in the source series

    std::size_t size() const noexcept { return target_index.size(); }
    bool empty() const noexcept { return target_index.empty(); }

    std::span<const double> input(std::size_t sample) const {
        return {inputs.data() + sample * window * features, window * features};
    }
    std::span<const double> target(std::size_t sample) const {
        return {targets.data() + sample * target_size, target_size};
    }
    /// Window as a window x features matrix (row t is step t).
    Matrix input_matrix(std::size_t sample) const;

    /// Keeps the samples whose target position lies in [begin, end).
    WindowedDataset select_targets(std::size_t begin, std::size_t end) const;
};

/// For t = N-1 .. L-2: input is steps t-N+1..t of every feature series,
/// target is step t+1 of every target series. Produces L - N samples.
WindowedDataset make_windows(const std::vector<std::span<const double>>& features,
                             const std::vector<std::span<const double>>& targets,
                             std::size_t window);

} // namespace deeptrend
