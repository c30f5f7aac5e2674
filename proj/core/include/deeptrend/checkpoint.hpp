#pragma once

#include "deeptrend/baselines.hpp"
#include "deeptrend/model.hpp"

#include <filesystem>
#include <iosfwd>

namespace deeptrend {

// Checkpoint layout (all integers u64 little-endian, reals IEEE-754 binary64):
//
//   magic "DTRNDCKP", format version, model tag (1 = DeepTrend, 2 = baseline)
//   DeepTrend: N, extraction hidden, prediction hidden, phase, scaler mean/std,
//              then matrices: extraction hidden W b, extraction output W b,
//              LSTM W_x? W_h? b_? for ? in i f o c, head W b
//   baseline:  kind, N, scaler mean/std, trend weeks, trend anchor (unix s),
//              2016 trend values, then the kind's parameters
//
// Loading validates every declared dimension against the matrices that follow.

inline constexpr std::uint64_t checkpoint_version = 1;

void write_checkpoint(std::ostream& out, const DeepTrendModel& model);
void write_checkpoint(std::ostream& out, const BaselinePredictor& predictor);
DeepTrendModel read_deeptrend_checkpoint(std::istream& in);
BaselinePredictor read_baseline_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const DeepTrendModel& model);
void save_checkpoint(const std::filesystem::path& path, const BaselinePredictor& predictor);
DeepTrendModel load_deeptrend_checkpoint(const std::filesystem::path& path);
BaselinePredictor load_baseline_checkpoint(const std::filesystem::path& path);

} // namespace deeptrend
