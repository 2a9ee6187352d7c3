#pragma once

#include "ecg/wavelet.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ecg {

struct DenoiseOptions {
    std::size_t levels = 8;
    std::size_t window = 251;  ///< moving-average width in samples, odd (~0.7 s at 360 Hz)
    ThresholdMode threshold_mode = ThresholdMode::Soft;
    std::string wavelet = "db4";
};

/// signal minus its centred moving average of width `window`. Near the ends
/// the window shrinks symmetrically so it stays centred.
std::vector<double> remove_baseline(std::span<const double> signal, std::size_t window);

/// Wavelet shrinkage followed by baseline removal; output has the input's length.
std::vector<double> denoise(std::span<const double> signal, const DenoiseOptions& options = {});

} // namespace ecg
