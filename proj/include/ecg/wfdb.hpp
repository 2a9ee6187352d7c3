#pragma once

// Readers for the three WFDB file kinds MIT-BIH ships: the text header
// (.hea), format-212 signal data (.dat) and MIT binary annotations (.atr).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecg::wfdb {

struct SignalSpec {
    std::string file_name;
    int format_code = 0;
    double gain = 200.0;  ///< ADC units per mV
    int baseline = 0;     ///< ADC value of 0 mV; equals adc_zero unless given explicitly
    int adc_resolution = 12;
    int adc_zero = 0;
    int initial_value = 0;
    int checksum = 0;
    std::string description;  ///< e.g. "MLII", kept verbatim
};

struct RecordHeader {
    std::string record_name;
    int num_signals = 0;
    int sampling_frequency = 0;
    std::size_t num_samples = 0;
    std::vector<SignalSpec> signals;
};

struct BeatAnnotation {
    std::size_t sample_index = 0;
    int code = 0;        ///< MIT annotation type code, 1..49
    std::string symbol;  ///< mnemonic, e.g. "N", "V", "+"
};

/// Parses a `.hea` file. Only single-segment, 2-signal, 360 Hz, format-212
/// records are accepted.
RecordHeader parse_header(std::string_view text);

/// Two 12-bit two's-complement samples per 3 bytes, channel 0 first.
struct Format212Samples {
    std::vector<std::int16_t> channel0;
    std::vector<std::int16_t> channel1;
};

Format212Samples decode_format212(std::span<const std::uint8_t> bytes, std::size_t num_samples);

/// Reads an MIT annotation stream. Pseudo-annotation words (SKIP, NUM, SUB,
/// CHN, AUX) are consumed but not emitted. When `num_samples` is given every
/// reconstructed index must lie below it.
std::vector<BeatAnnotation> parse_annotations(std::span<const std::uint8_t> bytes,
                                              std::optional<std::size_t> num_samples = {});

/// Mnemonic for an MIT annotation code ("?" for unassigned codes).
std::string_view annotation_symbol(int code) noexcept;

} // namespace ecg::wfdb
