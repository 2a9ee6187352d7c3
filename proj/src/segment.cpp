#include "ecg/segment.hpp"

#include "ecg/binary_io.hpp"
#include "ecg/errors.hpp"
#include "ecg/random.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <numeric>

namespace ecg {
namespace {

constexpr std::size_t kHalfWindow = kWindowLength / 2;
constexpr std::size_t kCrop = (kWindowLength - kSegmentLength) / 2;

// Largest-remainder apportionment of `total` over `weights`, capped per slot.
std::array<std::size_t, kNumClasses> apportion(const std::array<std::size_t, kNumClasses>& weights,
                                               const std::array<std::size_t, kNumClasses>& caps,
                                               std::size_t total) {
    const std::size_t weight_sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
    std::array<std::size_t, kNumClasses> quota{};
    std::array<double, kNumClasses> remainder{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double exact =
            static_cast<double>(total) * static_cast<double>(weights[c]) / static_cast<double>(weight_sum);
        quota[c] = std::min(caps[c], static_cast<std::size_t>(exact));
        remainder[c] = exact - static_cast<double>(quota[c]);
        assigned += quota[c];
    }
    std::array<std::size_t, kNumClasses> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    // Hand out what is left one at a time, largest remainder first, skipping full classes.
    while (assigned < total) {
        bool progressed = false;
        for (std::size_t c : order) {
            if (assigned == total)
                break;
            if (quota[c] < caps[c]) {
                ++quota[c];
                ++assigned;
                progressed = true;
            }
        }
        if (!progressed)
            break;
    }
    return quota;
}

} // namespace

std::vector<double> extract_window(std::span<const double> channel, std::size_t center) {
    if (center < kHalfWindow || center + kHalfWindow > channel.size())
        throw BoundarySkip("beat at sample " + std::to_string(center) +
                           " is too close to the record boundary");
    return {channel.begin() + static_cast<std::ptrdiff_t>(center - kHalfWindow),
            channel.begin() + static_cast<std::ptrdiff_t>(center + kHalfWindow)};
}

std::vector<double> reduce_dimension(std::span<const double> window) {
    if (window.size() != kWindowLength)
        throw ShapeError("expected a " + std::to_string(kWindowLength) + "-sample window, got " +
                         std::to_string(window.size()));
    return {window.begin() + kCrop, window.end() - kCrop};
}

std::vector<double> rescale(std::span<const double> segment) {
    if (segment.empty())
        throw LengthError("cannot rescale an empty segment");
    const auto [lo_it, hi_it] = std::minmax_element(segment.begin(), segment.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    std::vector<double> out(segment.size(), 0.0);
    if (range > 0.0)
        std::transform(segment.begin(), segment.end(), out.begin(),
                       [&](double x) { return 2.0 * ((x - lo) / range) - 1.0; });
    return out;
}

SegmentationResult segment_beats(const std::vector<EcgRecord>& records, const BeatIndex& index,
                                 const DenoiseOptions& options) {
    // Group beats per record so each record is denoised once.
    std::map<std::size_t, std::vector<const BeatRef*>> by_record;
    for (const auto& beat : index.beats)
        by_record[beat.record].push_back(&beat);

    using Partial = SegmentationResult;
    std::vector<std::future<Partial>> pending;
    for (const auto& [record_pos, beats] : by_record) {
        pending.push_back(std::async(std::launch::async, [&, record_pos = record_pos,
                                                          beats = beats] {
            Partial part;
            const auto& rec = records.at(record_pos);
            const int channel = beats.front()->channel;
            const auto clean = denoise(rec.channels.at(static_cast<std::size_t>(channel)), options);
            for (const BeatRef* beat : beats) {
                if (beat->sample_index < kHalfWindow ||
                    beat->sample_index + kHalfWindow > clean.size()) {
                    ++part.boundary_skips;
                    continue;
                }
                const auto scaled =
                    rescale(reduce_dimension(extract_window(clean, beat->sample_index)));
                BeatSegment seg;
                std::transform(scaled.begin(), scaled.end(), seg.samples.begin(),
                               [](double v) { return static_cast<float>(v); });
                seg.label = beat->label;
                seg.record_id = rec.name();
                seg.annotation_index = static_cast<std::uint32_t>(beat->sample_index);
                part.segments.push_back(std::move(seg));
            }
            return part;
        }));
    }

    SegmentationResult result;
    for (auto& f : pending) {
        auto part = f.get();
        result.boundary_skips += part.boundary_skips;
        std::move(part.segments.begin(), part.segments.end(), std::back_inserter(result.segments));
    }
    return result;
}

std::array<std::size_t, kNumClasses> class_histogram(std::span<const BeatSegment> segments) {
    std::array<std::size_t, kNumClasses> counts{};
    for (const auto& s : segments)
        ++counts[class_id(s.label)];
    return counts;
}

DatasetSplit build_split(const std::vector<BeatSegment>& segments, std::uint64_t seed,
                         std::optional<std::size_t> per_set_size) {
    if (segments.empty())
        throw SizeError("cannot split an empty beat index");

    Rng rng(seed);
    std::array<std::vector<std::size_t>, kNumClasses> groups;
    for (std::size_t i = 0; i < segments.size(); ++i)
        groups[class_id(segments[i].label)].push_back(i);

    std::array<std::vector<std::size_t>, kNumClasses> train_ids, test_ids;
    bool extra_to_train = true;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        auto& g = groups[c];
        shuffle(std::span<std::size_t>(g), rng);
        std::size_t n_train = g.size() / 2;
        if (g.size() % 2 == 1) {
            n_train += extra_to_train ? 1 : 0;
            extra_to_train = !extra_to_train;
        }
        train_ids[c].assign(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(n_train));
        test_ids[c].assign(g.begin() + static_cast<std::ptrdiff_t>(n_train), g.end());
    }

    if (per_set_size) {
        std::array<std::size_t, kNumClasses> pool{}, caps{};
        std::size_t available = 0;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            pool[c] = groups[c].size();
            caps[c] = std::min(train_ids[c].size(), test_ids[c].size());
            available += caps[c];
        }
        if (*per_set_size > available)
            throw SizeError("requested " + std::to_string(*per_set_size) +
                            " beats per set but only " + std::to_string(available) +
                            " can be placed in each set without duplication");
        const auto quota = apportion(pool, caps, *per_set_size);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            train_ids[c].resize(quota[c]);
            test_ids[c].resize(quota[c]);
        }
    }

    auto gather = [&](const std::array<std::vector<std::size_t>, kNumClasses>& ids) {
        std::vector<std::size_t> flat;
        for (const auto& v : ids)
            flat.insert(flat.end(), v.begin(), v.end());
        shuffle(std::span<std::size_t>(flat), rng);
        std::vector<BeatSegment> out;
        out.reserve(flat.size());
        for (auto i : flat)
            out.push_back(segments[i]);
        return out;
    };

    DatasetSplit split;
    split.seed = seed;
    split.train = gather(train_ids);
    split.test = gather(test_ids);
    return split;
}

std::vector<std::uint8_t> serialize_dataset(std::span<const BeatSegment> segments) {
    binary::Writer w;
    w.bytes("ECGB");
    w.u16(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(segments.size()));
    for (const auto& s : segments) {
        w.str16(s.record_id);
        w.u32(s.annotation_index);
        w.u8(static_cast<std::uint8_t>(s.label));
        for (float v : s.samples)
            w.f32(v);
    }
    return std::move(w.buffer());
}

std::vector<BeatSegment> deserialize_dataset(std::span<const std::uint8_t> bytes) {
    binary::Reader<InputError> r(bytes);
    if (r.bytes(4) != "ECGB")
        throw InputError("not a beat dataset (bad magic)");
    if (const auto version = r.u16(); version != kDatasetVersion)
        throw InputError("unsupported dataset version " + std::to_string(version));
    const std::uint32_t count = r.u32();
    std::vector<BeatSegment> out;
    out.reserve(std::min<std::size_t>(count, bytes.size() / (kSegmentLength * 4)));
    for (std::uint32_t i = 0; i < count; ++i) {
        BeatSegment s;
        s.record_id = r.str16();
        s.annotation_index = r.u32();
        const auto label = class_from_id(r.u8());
        if (!label)
            throw InputError("segment " + std::to_string(i) + " has an invalid label");
        s.label = *label;
        for (auto& v : s.samples)
            v = r.f32();
        out.push_back(std::move(s));
    }
    if (!r.at_end())
        throw InputError("trailing bytes after " + std::to_string(count) + " segments");
    return out;
}

void write_dataset(const std::filesystem::path& path, std::span<const BeatSegment> segments) {
    binary::write_file(path.string(), serialize_dataset(segments));
}

std::vector<BeatSegment> read_dataset(const std::filesystem::path& path) {
    return deserialize_dataset(binary::read_file(path.string()));
}

void write_dataset_csv(const std::filesystem::path& path, std::span<const BeatSegment> segments) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "label";
    for (std::size_t i = 0; i < kSegmentLength; ++i)
        out << ",s" << i;
    out << '\n';
    char buf[32];
    for (const auto& s : segments) {
        out << class_name(s.label);
        for (float v : s.samples) {
            std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(v));
            out << buf;
        }
        out << '\n';
    }
}

} // namespace ecg
