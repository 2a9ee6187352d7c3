#include "ecg/ingest.hpp"

#include "ecg/errors.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <iterator>

namespace ecg {
namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

int EcgRecord::channel_index(std::string_view lead) const noexcept {
    for (std::size_t i = 0; i < header.signals.size(); ++i)
        if (header.signals[i].description == lead)
            return static_cast<int>(i);
    return -1;
}

EcgRecord make_record(std::string_view header_text, std::span<const std::uint8_t> signal_bytes,
                      std::span<const std::uint8_t> annotation_bytes) {
    EcgRecord rec;
    rec.header = wfdb::parse_header(header_text);
    const auto raw = wfdb::decode_format212(signal_bytes, rec.header.num_samples);
    const std::array<const std::vector<std::int16_t>*, 2> sources = {&raw.channel0,
                                                                     &raw.channel1};
    for (std::size_t c = 0; c < 2; ++c) {
        const auto& spec = rec.header.signals[c];
        auto& dst = rec.channels[c];
        dst.resize(sources[c]->size());
        std::transform(sources[c]->begin(), sources[c]->end(), dst.begin(), [&](std::int16_t v) {
            return (static_cast<double>(v) - spec.baseline) / spec.gain;
        });
    }
    rec.annotations = wfdb::parse_annotations(annotation_bytes, rec.header.num_samples);
    return rec;
}

EcgRecord load_record(const std::filesystem::path& dir, const std::string& name) {
    const auto header_text = read_text(dir / (name + ".hea"));
    // Parse first so the signal file name comes from the header.
    const auto header = wfdb::parse_header(header_text);
    const auto signal = read_bytes(dir / header.signals[0].file_name);
    const auto annotations = read_bytes(dir / (name + ".atr"));
    return make_record(header_text, signal, annotations);
}

std::vector<std::string> discover_records(const std::filesystem::path& dir) {
    std::vector<std::string> names;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".hea")
            names.push_back(entry.path().stem().string());
    }
    if (ec)
        throw IoError("cannot list " + dir.string() + ": " + ec.message());
    std::sort(names.begin(), names.end());
    return names;
}

std::vector<EcgRecord> load_records(const std::filesystem::path& dir,
                                    const std::vector<std::string>& names) {
    std::vector<std::future<EcgRecord>> pending;
    pending.reserve(names.size());
    for (const auto& name : names)
        pending.push_back(std::async(std::launch::async, [&dir, name] {
            return load_record(dir, name);
        }));
    std::vector<EcgRecord> out;
    out.reserve(names.size());
    for (auto& f : pending)
        out.push_back(f.get());
    return out;
}

bool is_excluded_record(std::string_view name) noexcept {
    return std::find(kExcludedRecords.begin(), kExcludedRecords.end(), name) !=
           kExcludedRecords.end();
}

std::array<std::size_t, kNumClasses> BeatIndex::class_counts() const noexcept {
    std::array<std::size_t, kNumClasses> counts{};
    for (const auto& b : beats)
        ++counts[class_id(b.label)];
    return counts;
}

BeatIndex select_dataset(const std::vector<EcgRecord>& records) {
    BeatIndex index;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (is_excluded_record(rec.name())) {
            index.excluded_records.push_back(rec.name());
            continue;
        }
        const int lead = rec.channel_index("MLII");
        if (lead < 0)
            throw SelectionError("record " + rec.name() + " has no MLII channel");
        index.selected_records.push_back(rec.name());
        for (std::size_t a = 0; a < rec.annotations.size(); ++a) {
            const auto& ann = rec.annotations[a];
            if (auto label = class_from_symbol(ann.symbol))
                index.beats.push_back({r, lead, a, ann.sample_index, *label});
        }
    }
    return index;
}

} // namespace ecg
