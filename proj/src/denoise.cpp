#include "ecg/denoise.hpp"

#include "ecg/errors.hpp"

#include <algorithm>

namespace ecg {

std::vector<double> remove_baseline(std::span<const double> signal, std::size_t window) {
    if (window == 0 || window % 2 == 0)
        throw ParameterError("moving-average window must be odd and positive, got " +
                             std::to_string(window));
    if (window > signal.size())
        throw ParameterError("moving-average window " + std::to_string(window) +
                             " exceeds signal length " + std::to_string(signal.size()));

    const std::size_t n = signal.size();
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        prefix[i + 1] = prefix[i] + signal[i];

    const std::size_t half = window / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = std::min({half, i, n - 1 - i});
        if (r == 0) {
            out[i] = 0.0;
            continue;
        }
        const double mean = (prefix[i + r + 1] - prefix[i - r]) / static_cast<double>(2 * r + 1);
        out[i] = signal[i] - mean;
    }
    return out;
}

std::vector<double> denoise(std::span<const double> signal, const DenoiseOptions& options) {
    const auto wavelet = Wavelet::by_name(options.wavelet);
    const auto decomp = dwt_forward(signal, options.levels, wavelet);
    const auto shrunk = threshold_details(decomp, ThresholdPolicy{options.threshold_mode});
    const auto smooth = dwt_inverse(shrunk, wavelet);
    return remove_baseline(smooth, options.window);
}

} // namespace ecg
