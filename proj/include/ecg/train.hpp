#pragma once

#include "ecg/beat_class.hpp"
#include "ecg/model.hpp"
#include "ecg/segment.hpp"

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace ecg {

struct TrainConfig {
    std::size_t epochs = 300;
    std::size_t batch_size = 32;
    double learning_rate = 0.001;
    std::uint64_t shuffle_seed = 0;
    OptimizerKind optimizer = OptimizerKind::Adam;
    bool evaluate_each_epoch = false;  ///< also score the test set after every epoch
};

struct EpochLog {
    std::size_t epoch = 0;  ///< 1-based
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    std::optional<double> test_accuracy;
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochLog> epochs;
    std::size_t optimizer_steps = 0;
};

struct TrainResult {
    ModelParams params;
    TrainLog log;
};

/// Mini-batch training, reshuffling the train set every epoch. A non-finite
/// loss or gradient raises NumericError carrying the epoch and batch.
TrainResult train(ModelParams params, const DatasetSplit& split, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// (n, 1, 180) input tensor for the given segments.
Tensor make_batch(std::span<const BeatSegment> segments);

/// Predicted class ids; batches are scored in parallel.
std::vector<int> predict_classes(const ModelParams& params, std::span<const BeatSegment> segments);

struct Prediction {
    BeatClass label = BeatClass::NOR;
    std::array<double, kNumClasses> probabilities{};
};

Prediction predict(const ModelParams& params, const BeatSegment& segment);

std::vector<int> labels_of(std::span<const BeatSegment> segments);

} // namespace ecg
