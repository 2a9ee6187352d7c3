#pragma once

#include "ecg/beat_class.hpp"
#include "ecg/denoise.hpp"
#include "ecg/ingest.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ecg {

inline constexpr std::size_t kWindowLength = 200;
inline constexpr std::size_t kSegmentLength = 180;

struct BeatSegment {
    std::array<float, kSegmentLength> samples{};
    BeatClass label = BeatClass::NOR;
    std::string record_id;
    std::uint32_t annotation_index = 0;  ///< sample index of the annotated beat
};

struct DatasetSplit {
    std::vector<BeatSegment> train;
    std::vector<BeatSegment> test;
    std::uint64_t seed = 0;
};

/// samples[center-100, center+100). Throws BoundarySkip if that range leaves the channel.
std::vector<double> extract_window(std::span<const double> channel, std::size_t center);

/// Centre crop 200 -> 180 (drops 10 samples at each end).
std::vector<double> reduce_dimension(std::span<const double> window);

/// Affine map onto [-1, 1]; a constant segment maps to zeros.
std::vector<double> rescale(std::span<const double> segment);

struct SegmentationResult {
    std::vector<BeatSegment> segments;
    std::size_t boundary_skips = 0;
};

/// Denoises the MLII channel of each selected record, then cuts every indexed beat.
SegmentationResult segment_beats(const std::vector<EcgRecord>& records, const BeatIndex& index,
                                 const DenoiseOptions& options = {});

/// Seeded, per-class stratified 50/50 split. With `per_set_size` both sets are
/// down-sampled (never duplicated) to that size with the class mix of the whole pool.
DatasetSplit build_split(const std::vector<BeatSegment>& segments, std::uint64_t seed,
                         std::optional<std::size_t> per_set_size = {});

std::array<std::size_t, kNumClasses> class_histogram(std::span<const BeatSegment> segments);

// "ECGB" container: magic, u16 version, u32 count, then per segment a
// u16-length-prefixed record id, u32 annotation index, u8 label and 180
// little-endian f32 samples.
inline constexpr std::uint16_t kDatasetVersion = 1;

std::vector<std::uint8_t> serialize_dataset(std::span<const BeatSegment> segments);
std::vector<BeatSegment> deserialize_dataset(std::span<const std::uint8_t> bytes);

void write_dataset(const std::filesystem::path& path, std::span<const BeatSegment> segments);
std::vector<BeatSegment> read_dataset(const std::filesystem::path& path);

/// One row per beat: label name then the 180 samples.
void write_dataset_csv(const std::filesystem::path& path, std::span<const BeatSegment> segments);

} // namespace ecg
