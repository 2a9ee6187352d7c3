#pragma once

#include "ecg/beat_class.hpp"
#include "ecg/train.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

namespace ecg {

/// counts[true][predicted].
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

    std::uint64_t total() const noexcept;
    std::uint64_t trace() const noexcept;
    std::uint64_t row_sum(std::size_t true_class) const noexcept;
    std::uint64_t column_sum(std::size_t predicted_class) const noexcept;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws InputError on a length mismatch or a label outside 0..4.
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted);

/// One-vs-rest counts and rates for a single class. A rate whose denominator
/// is zero is undefined (nullopt).
struct ClassMetrics {
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    double accuracy = 0.0;  ///< (TP + TN) / total
    std::optional<double> sensitivity;  ///< TP / (TP + FN)
    std::optional<double> specificity;  ///< TN / (TN + FP)
};

struct MetricsReport {
    std::uint64_t total = 0;
    double accuracy = 0.0;  ///< trace / total
    std::array<ClassMetrics, kNumClasses> per_class{};
    double macro_accuracy = 0.0;
    /// Unweighted means over the classes where the rate is defined.
    std::optional<double> macro_sensitivity;
    std::optional<double> macro_specificity;
};

/// Throws InputError for an empty matrix.
MetricsReport compute_metrics(const ConfusionMatrix& cm);

/// Writes confusion.csv and metrics.json into `dir`, creating it if needed.
void write_evaluation(const MetricsReport& report, const ConfusionMatrix& cm,
                      const std::filesystem::path& dir);

/// write_evaluation() plus curves.csv.
void emit_report(const MetricsReport& report, const ConfusionMatrix& cm, const TrainLog& log,
                 const std::filesystem::path& dir);

std::string metrics_json(const MetricsReport& report, const ConfusionMatrix& cm);
std::string confusion_csv(const ConfusionMatrix& cm);
std::string curves_csv(const TrainLog& log);

} // namespace ecg
