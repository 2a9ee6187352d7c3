#pragma once

#include "ecg/nn.hpp"
#include "ecg/optimizer.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecg {

/// Layer hyper-parameters. Every convolution pads by kernel / 2.
struct ModelConfig {
    std::size_t input_length = 180;
    std::size_t conv_filters = 18;
    std::size_t conv_kernel = 3;
    std::size_t conv_stride = 2;
    std::size_t pool_window = 2;
    std::size_t pool_stride = 2;
    std::size_t res_kernel = 7;
    std::size_t res_stride = 2;
    std::size_t res_filters = 18;
    std::size_t fc_hidden = 64;
    std::size_t num_classes = 5;
    std::uint64_t seed = 0;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;

    /// "key=value" lines in a fixed order.
    std::string to_text() const;
    /// Inverse of to_text(); unknown keys or bad numbers throw ConfigError.
    static ModelConfig from_text(std::string_view text);
};

/// Feature-map lengths after conv1, pool1, conv2, pool2 and the residual
/// block, starting with the input length. Throws ConfigError (quoting the
/// chain) if any stage would be empty or the config has a zero field.
std::vector<std::size_t> length_chain(const ModelConfig& config);

/// Width of the flattened residual-block output.
std::size_t flatten_features(const ModelConfig& config);

/// input -> [conv+relu -> maxpool] x2 -> residual block
/// [conv(stride s)+relu -> conv(stride 1)] + conv1x1(stride s) shortcut -> relu
/// -> flatten -> dense+relu -> dense (logits).
template <typename T>
struct BasicModelParams {
    ModelConfig config;
    ParameterList<T> tensors;  ///< conv1, conv2, res_conv1, res_conv2, res_projection, fc1, fc2 (weight then bias)

    const BasicTensor<T>& get(std::string_view name) const;

    friend bool operator==(const BasicModelParams&, const BasicModelParams&) = default;
};
using ModelParams = BasicModelParams<float>;

/// Names and shapes implied by `config`, in storage order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_shapes(
    const ModelConfig& config);

/// Weights uniform in +-sqrt(6 / fan_in) from a generator seeded with config.seed; biases zero.
template <typename T = float>
BasicModelParams<T> build_model(const ModelConfig& config);

/// Logits (batch, num_classes) for input (batch, 1, input_length).
template <typename T>
BasicTensor<T> forward(const BasicModelParams<T>& params, const BasicTensor<T>& batch);

template <typename T>
struct LossGradients {
    double loss = 0.0;
    BasicTensor<T> probs;
    ParameterList<T> grads;  ///< same order and shapes as params.tensors
};

/// Mean softmax cross-entropy over the batch and its gradient for every parameter.
template <typename T>
LossGradients<T> loss_and_gradients(const BasicModelParams<T>& params, const BasicTensor<T>& batch,
                                    std::span<const int> labels);

template <typename To, typename From>
BasicModelParams<To> cast_params(const BasicModelParams<From>& params) {
    BasicModelParams<To> out{params.config, {}};
    for (const auto& t : params.tensors)
        out.tensors.push_back({t.name, tensor_cast<To>(t.value)});
    return out;
}

} // namespace ecg
