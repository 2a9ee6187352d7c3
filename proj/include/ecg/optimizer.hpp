#pragma once

#include "ecg/tensor.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ecg {

template <typename T>
struct NamedTensor {
    std::string name;
    BasicTensor<T> value;

    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Ordered parameter (or gradient) tensors of a network.
template <typename T>
using ParameterList = std::vector<NamedTensor<T>>;

enum class OptimizerKind { Adam, Sgd };

OptimizerKind optimizer_from_name(std::string_view name);
std::string_view optimizer_name(OptimizerKind kind) noexcept;

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> first_moment;   ///< one buffer per parameter tensor
    std::vector<std::vector<double>> second_moment;
};

/// Bias-corrected Adam update. Throws NumericError, leaving params and state
/// untouched, if any gradient is non-finite.
template <typename T>
void adam_step(ParameterList<T>& params, const ParameterList<T>& grads, AdamState& state,
               double learning_rate);

/// params -= learning_rate * grads, with the same finiteness check.
template <typename T>
void sgd_step(ParameterList<T>& params, const ParameterList<T>& grads, double learning_rate);

} // namespace ecg
