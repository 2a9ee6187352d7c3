#include "ecg/wavelet.hpp"

#include "ecg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ecg {
namespace {

std::size_t ceil_half(std::size_t n) { return (n + 1) / 2; }

std::size_t level_length(std::size_t n, std::size_t level) {
    for (std::size_t k = 0; k < level; ++k)
        n = ceil_half(n);
    return n;
}

// One analysis step on a zero-padded, even-length copy of `x`.
void analyze(std::span<const double> x, std::span<const double> h, std::span<const double> g,
             std::vector<double>& approx, std::vector<double>& detail) {
    const std::size_t half = ceil_half(x.size());
    const std::size_t n = 2 * half;
    approx.assign(half, 0.0);
    detail.assign(half, 0.0);
    for (std::size_t k = 0; k < half; ++k) {
        double a = 0.0;
        double d = 0.0;
        for (std::size_t m = 0; m < h.size(); ++m) {
            const std::size_t idx = (2 * k + m) % n;
            const double v = idx < x.size() ? x[idx] : 0.0;
            a += h[m] * v;
            d += g[m] * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

// Transpose of analyze(); yields 2 * approx.size() samples.
std::vector<double> synthesize(std::span<const double> approx, std::span<const double> detail,
                               std::span<const double> h, std::span<const double> g) {
    const std::size_t n = 2 * approx.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < approx.size(); ++k) {
        for (std::size_t m = 0; m < h.size(); ++m) {
            const std::size_t idx = (2 * k + m) % n;
            out[idx] += h[m] * approx[k] + g[m] * detail[k];
        }
    }
    return out;
}

} // namespace

std::vector<double> Wavelet::highpass() const {
    const std::size_t L = lowpass.size();
    std::vector<double> g(L);
    for (std::size_t m = 0; m < L; ++m)
        g[m] = (m % 2 == 0 ? 1.0 : -1.0) * lowpass[L - 1 - m];
    return g;
}

Wavelet Wavelet::db4() {
    return {{0.2303778133088965, 0.7148465705529157, 0.6308807679298589, -0.027983769416859854,
             -0.18703481171909309, 0.030841381835560764, 0.0328830116668852,
             -0.010597401785069032}};
}

Wavelet Wavelet::d4() {
    return {{0.48296291314453416, 0.8365163037378079, 0.2241438680420134, -0.12940952255126037}};
}

Wavelet Wavelet::by_name(std::string_view name) {
    if (name == "db4")
        return db4();
    if (name == "d4")
        return d4();
    throw ParameterError("unknown wavelet '" + std::string(name) + "' (expected db4 or d4)");
}

WaveletDecomposition dwt_forward(std::span<const double> signal, std::size_t levels,
                                 const Wavelet& wavelet) {
    if (levels == 0)
        throw ParameterError("wavelet levels must be at least 1");
    if (levels >= 8 * sizeof(std::size_t) || signal.size() < (std::size_t{1} << levels))
        throw LengthError("signal of length " + std::to_string(signal.size()) +
                          " is shorter than 2^" + std::to_string(levels));

    const auto& h = wavelet.lowpass;
    const auto g = wavelet.highpass();
    WaveletDecomposition out;
    out.original_length = signal.size();
    out.details.resize(levels);

    std::vector<double> current(signal.begin(), signal.end());
    std::vector<double> approx;
    for (std::size_t level = 0; level < levels; ++level) {
        analyze(current, h, g, approx, out.details[level]);
        current.swap(approx);
    }
    out.approx = std::move(current);
    return out;
}

std::vector<double> dwt_inverse(const WaveletDecomposition& decomp, const Wavelet& wavelet) {
    const std::size_t levels = decomp.details.size();
    if (levels == 0)
        throw ShapeError("decomposition has no detail levels");
    for (std::size_t k = 0; k < levels; ++k) {
        const std::size_t expected = level_length(decomp.original_length, k + 1);
        if (decomp.details[k].size() != expected)
            throw ShapeError("detail level " + std::to_string(k + 1) + " has " +
                             std::to_string(decomp.details[k].size()) + " coefficients, expected " +
                             std::to_string(expected));
    }
    if (decomp.approx.size() != level_length(decomp.original_length, levels))
        throw ShapeError("approximation has " + std::to_string(decomp.approx.size()) +
                         " coefficients, expected " +
                         std::to_string(level_length(decomp.original_length, levels)));

    const auto& h = wavelet.lowpass;
    const auto g = wavelet.highpass();
    std::vector<double> current = decomp.approx;
    for (std::size_t k = levels; k-- > 0;) {
        auto up = synthesize(current, decomp.details[k], h, g);
        up.resize(level_length(decomp.original_length, k));
        current.swap(up);
    }
    return current;
}

ThresholdMode threshold_mode_from_name(std::string_view name) {
    if (name == "soft")
        return ThresholdMode::Soft;
    if (name == "hard")
        return ThresholdMode::Hard;
    throw ParameterError("unknown threshold mode '" + std::string(name) +
                         "' (expected soft or hard)");
}

std::string_view threshold_mode_name(ThresholdMode mode) noexcept {
    return mode == ThresholdMode::Soft ? "soft" : "hard";
}

double noise_sigma(const WaveletDecomposition& decomp) {
    if (decomp.details.empty() || decomp.details[0].empty())
        return 0.0;
    std::vector<double> mags(decomp.details[0].size());
    std::transform(decomp.details[0].begin(), decomp.details[0].end(), mags.begin(),
                   [](double c) { return std::abs(c); });
    const std::size_t n = mags.size();
    std::nth_element(mags.begin(), mags.begin() + n / 2, mags.end());
    double median = mags[n / 2];
    if (n % 2 == 0) {
        const double lower = *std::max_element(mags.begin(), mags.begin() + n / 2);
        median = 0.5 * (median + lower);
    }
    return median / 0.6745;
}

double universal_threshold(const WaveletDecomposition& decomp) {
    if (decomp.original_length < 2)
        return 0.0;
    return noise_sigma(decomp) *
           std::sqrt(2.0 * std::log(static_cast<double>(decomp.original_length)));
}

double soft_threshold(double c, double t) noexcept {
    const double mag = std::abs(c) - t;
    return mag > 0.0 ? std::copysign(mag, c) : 0.0;
}

double hard_threshold(double c, double t) noexcept { return std::abs(c) > t ? c : 0.0; }

WaveletDecomposition threshold_details(const WaveletDecomposition& decomp,
                                       const ThresholdPolicy& policy) {
    WaveletDecomposition out = decomp;
    const double t = universal_threshold(decomp);
    if (t == 0.0)
        return out;
    for (auto& level : out.details)
        for (auto& c : level)
            c = policy.mode == ThresholdMode::Soft ? soft_threshold(c, t) : hard_threshold(c, t);
    return out;
}

} // namespace ecg
