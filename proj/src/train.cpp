#include "ecg/train.hpp"

#include "ecg/errors.hpp"
#include "ecg/random.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <numeric>
#include <thread>

namespace ecg {
namespace {

int argmax_row(const Tensor& t, std::size_t row) {
    const std::size_t k = t.dim(1);
    const float* p = t.data() + row * k;
    return static_cast<int>(std::max_element(p, p + k) - p);
}

} // namespace

Tensor make_batch(std::span<const BeatSegment> segments) {
    Tensor t({segments.size(), 1, kSegmentLength});
    for (std::size_t i = 0; i < segments.size(); ++i)
        std::copy(segments[i].samples.begin(), segments[i].samples.end(),
                  t.data() + i * kSegmentLength);
    return t;
}

std::vector<int> labels_of(std::span<const BeatSegment> segments) {
    std::vector<int> labels(segments.size());
    std::transform(segments.begin(), segments.end(), labels.begin(),
                   [](const BeatSegment& s) { return static_cast<int>(class_id(s.label)); });
    return labels;
}

std::vector<int> predict_classes(const ModelParams& params, std::span<const BeatSegment> segments) {
    constexpr std::size_t kChunk = 256;
    std::vector<int> out(segments.size());
    const std::size_t chunks = (segments.size() + kChunk - 1) / kChunk;
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::future<void>> pending;
    for (std::size_t w = 0; w < std::min(workers, chunks); ++w) {
        pending.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t c = w; c < chunks; c += workers) {
                const std::size_t lo = c * kChunk;
                const std::size_t hi = std::min(segments.size(), lo + kChunk);
                const auto logits = forward(params, make_batch(segments.subspan(lo, hi - lo)));
                for (std::size_t i = lo; i < hi; ++i)
                    out[i] = argmax_row(logits, i - lo);
            }
        }));
    }
    for (auto& f : pending)
        f.get();
    return out;
}

Prediction predict(const ModelParams& params, const BeatSegment& segment) {
    const auto probs = softmax(forward(params, make_batch(std::span(&segment, 1))));
    Prediction p;
    for (std::size_t j = 0; j < kNumClasses && j < probs.dim(1); ++j)
        p.probabilities[j] = probs[j];
    p.label = *class_from_id(static_cast<std::size_t>(argmax_row(probs, 0)));
    return p;
}

TrainResult train(ModelParams params, const DatasetSplit& split, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    if (split.train.empty())
        throw SizeError("training set is empty");
    if (config.epochs == 0 || config.batch_size == 0)
        throw ConfigError("epochs and batch size must be at least 1");

    Rng rng(config.shuffle_seed);
    AdamState adam;
    TrainLog log;
    const std::size_t n = split.train.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<BeatSegment> batch_segments;
    const auto test_labels = labels_of(split.test);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        shuffle(std::span<std::size_t>(order), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        std::size_t batch_no = 0;
        for (std::size_t lo = 0; lo < n; lo += config.batch_size) {
            ++batch_no;
            const std::size_t hi = std::min(n, lo + config.batch_size);
            batch_segments.clear();
            for (std::size_t i = lo; i < hi; ++i)
                batch_segments.push_back(split.train[order[i]]);
            const auto labels = labels_of(batch_segments);
            try {
                auto lg = loss_and_gradients(params, make_batch(batch_segments), labels);
                loss_sum += lg.loss * static_cast<double>(hi - lo);
                for (std::size_t i = 0; i < labels.size(); ++i)
                    correct += argmax_row(lg.probs, i) == labels[i];
                if (config.optimizer == OptimizerKind::Adam)
                    adam_step(params.tensors, lg.grads, adam, config.learning_rate);
                else
                    sgd_step(params.tensors, lg.grads, config.learning_rate);
            } catch (const NumericError& e) {
                throw NumericError(e.what(), epoch, batch_no);
            }
            ++log.optimizer_steps;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = loss_sum / static_cast<double>(n);
        entry.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
        if (config.evaluate_each_epoch && !split.test.empty()) {
            const auto pred = predict_classes(params, split.test);
            std::size_t hits = 0;
            for (std::size_t i = 0; i < pred.size(); ++i)
                hits += pred[i] == test_labels[i];
            entry.test_accuracy = static_cast<double>(hits) / static_cast<double>(pred.size());
        }
        entry.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log.epochs.push_back(entry);
        if (on_epoch)
            on_epoch(entry);
    }
    return {std::move(params), std::move(log)};
}

} // namespace ecg
