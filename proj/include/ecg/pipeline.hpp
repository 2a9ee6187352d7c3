#pragma once

// The five CLI commands as library calls. Each returns the process exit
// code and writes human-readable progress to `out`, diagnostics to `err`.

#include "ecg/denoise.hpp"
#include "ecg/model.hpp"
#include "ecg/train.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ecg {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kInput = 2;         ///< missing or unreadable input data
inline constexpr int kPipeline = 3;      ///< preprocessing / dataset problems
inline constexpr int kNumeric = 4;       ///< non-finite values during training
inline constexpr int kCompatibility = 5; ///< checkpoint and data do not fit together
} // namespace exit_code

struct RunConfig {
    std::filesystem::path data_dir = ".";
    std::filesystem::path output_dir = "out";
    std::vector<std::string> records;  ///< empty: every *.hea in data_dir
    std::uint64_t seed = 1;
    DenoiseOptions denoise;
    std::optional<std::size_t> per_set_size = 13200;
    std::optional<std::size_t> limit;  ///< cap on train and test set sizes
    bool export_csv = false;
    ModelConfig model;
    TrainConfig train;

    // evaluate / predict
    std::filesystem::path checkpoint;
    std::filesystem::path dataset;  ///< empty: <output_dir>/test.ecgb
    std::optional<std::size_t> balanced_sample;
    std::string record;
    std::size_t annotation_index = 0;

    /// Applies the keys present in `json_text` on top of the current values.
    void merge_json(std::string_view json_text);
    std::string to_json() const;
};

/// Name of the environment variable that overrides data_dir.
inline constexpr const char* kDataDirEnv = "ECG_DATA_DIR";

int cmd_ingest(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_preprocess(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Writes the denoised MLII channel of one record next to the raw one as CSV.
int cmd_denoise(const RunConfig& config, std::ostream& out, std::ostream& err);

} // namespace ecg
