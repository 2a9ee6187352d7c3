#pragma once

#include "ecg/beat_class.hpp"
#include "ecg/wfdb.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace ecg {

/// One MIT-BIH recording, converted to millivolts.
struct EcgRecord {
    wfdb::RecordHeader header;
    std::array<std::vector<double>, 2> channels;
    std::vector<wfdb::BeatAnnotation> annotations;

    const std::string& name() const noexcept { return header.record_name; }
    /// Index of the channel described as `lead`, or -1.
    int channel_index(std::string_view lead) const noexcept;
};

/// Builds a record from already-read file contents.
EcgRecord make_record(std::string_view header_text, std::span<const std::uint8_t> signal_bytes,
                      std::span<const std::uint8_t> annotation_bytes);

/// Loads `<dir>/<name>.hea`, its signal file and `<name>.atr`.
EcgRecord load_record(const std::filesystem::path& dir, const std::string& name);

/// Record names of every `*.hea` file in `dir`, sorted.
std::vector<std::string> discover_records(const std::filesystem::path& dir);

/// Loads records in parallel; output order follows `names`.
std::vector<EcgRecord> load_records(const std::filesystem::path& dir,
                                    const std::vector<std::string>& names);

/// Records dropped for poor signal quality.
inline const std::array<std::string, 4> kExcludedRecords = {"102", "104", "107", "217"};

bool is_excluded_record(std::string_view name) noexcept;

struct BeatRef {
    std::size_t record = 0;   ///< position in the record list passed to select_dataset
    int channel = 0;          ///< MLII channel of that record
    std::size_t annotation = 0;  ///< position in the record's annotation list
    std::size_t sample_index = 0;
    BeatClass label = BeatClass::NOR;
};

struct BeatIndex {
    std::vector<BeatRef> beats;
    std::vector<std::string> selected_records;
    std::vector<std::string> excluded_records;

    std::array<std::size_t, kNumClasses> class_counts() const noexcept;
};

/// Keeps MLII beats labelled N, L, R, A or V from every non-excluded record.
/// Throws SelectionError for a retained record without an MLII channel.
BeatIndex select_dataset(const std::vector<EcgRecord>& records);

} // namespace ecg
