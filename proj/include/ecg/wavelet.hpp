#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace ecg {

/// Orthogonal wavelet given by its scaling (low-pass) filter. The high-pass
/// filter is the quadrature mirror g[m] = (-1)^m h[L-1-m].
struct Wavelet {
    std::vector<double> lowpass;

    std::vector<double> highpass() const;

    /// Daubechies wavelet with 4 vanishing moments (8 taps), "db4".
    static Wavelet db4();
    /// The 4-tap Daubechies wavelet sometimes also called "D4" (db2).
    static Wavelet d4();
    /// "db4" or "d4"; throws ParameterError otherwise.
    static Wavelet by_name(std::string_view name);
};

struct WaveletDecomposition {
    std::vector<double> approx;                ///< coarsest approximation
    std::vector<std::vector<double>> details;  ///< details[0] is level 1 (finest)
    std::size_t original_length = 0;

    std::size_t levels() const noexcept { return details.size(); }
};

/// Multi-level DWT with periodic extension. A level whose input has odd
/// length is zero-padded by one sample first, so level k has
/// ceil(N / 2^k) coefficients and the transform stays orthonormal.
WaveletDecomposition dwt_forward(std::span<const double> signal, std::size_t levels,
                                 const Wavelet& wavelet = Wavelet::db4());

/// Inverse of dwt_forward; returns exactly original_length samples.
std::vector<double> dwt_inverse(const WaveletDecomposition& decomp,
                                const Wavelet& wavelet = Wavelet::db4());

enum class ThresholdMode { Soft, Hard };

ThresholdMode threshold_mode_from_name(std::string_view name);
std::string_view threshold_mode_name(ThresholdMode mode) noexcept;

struct ThresholdPolicy {
    ThresholdMode mode = ThresholdMode::Soft;
};

/// Noise estimate median(|details[0]|) / 0.6745.
double noise_sigma(const WaveletDecomposition& decomp);

/// sigma * sqrt(2 ln N) with N = original_length.
double universal_threshold(const WaveletDecomposition& decomp);

double soft_threshold(double c, double t) noexcept;
double hard_threshold(double c, double t) noexcept;

/// Applies the universal threshold to every detail level; approx is untouched.
WaveletDecomposition threshold_details(const WaveletDecomposition& decomp,
                                       const ThresholdPolicy& policy);

} // namespace ecg
