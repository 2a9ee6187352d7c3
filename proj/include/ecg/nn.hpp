#pragma once

// Forward and backward passes of the layers the classifier is built from.
// Every backward function returns exact gradients of a scalar loss given
// the upstream gradient `dy` of the layer output.

#include "ecg/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ecg {

struct ConvGeometry {
    std::size_t stride = 1;
    std::size_t padding = 0;  ///< zeros added on each side
};

template <typename T>
struct BasicConvParams {
    BasicTensor<T> weights;  ///< (out_channels, in_channels, kernel)
    BasicTensor<T> bias;     ///< (out_channels)
    ConvGeometry geometry;
};
using ConvParams = BasicConvParams<float>;

/// floor((length + 2 padding - kernel) / stride) + 1, or 0 if the kernel does not fit.
std::size_t conv_output_length(std::size_t length, std::size_t kernel, const ConvGeometry& g);

template <typename T>
struct ConvGrads {
    BasicTensor<T> dx, dw, db;
};

/// Cross-correlation: y[b,o,i] = bias[o] + sum_c sum_m w[o,c,m] x[b,c,i*stride+m-padding].
template <typename T>
BasicTensor<T> conv1d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& bias, const ConvGeometry& g);

template <typename T>
ConvGrads<T> conv1d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                             const BasicTensor<T>& dy, const ConvGeometry& g);

template <typename T>
BasicTensor<T> conv1d_forward(const BasicTensor<T>& x, const BasicConvParams<T>& p) {
    return conv1d_forward(x, p.weights, p.bias, p.geometry);
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x);

/// dy masked by x > 0; the subgradient at exactly 0 is 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& dy);

struct PoolSpec {
    std::size_t window = 2;
    std::size_t stride = 2;
};

template <typename T>
struct PoolResult {
    BasicTensor<T> y;
    std::vector<std::size_t> argmax;  ///< flat input index feeding each output
};

/// Max over x[b,c,i*stride .. i*stride+window); ties go to the lowest index.
template <typename T>
PoolResult<T> maxpool1d_forward(const BasicTensor<T>& x, const PoolSpec& s);

template <typename T>
BasicTensor<T> maxpool1d_backward(const BasicTensor<T>& dy, std::span<const std::size_t> argmax,
                                  const std::vector<std::size_t>& input_shape);

template <typename T>
struct DenseGrads {
    BasicTensor<T> dx, dw, db;
};

/// y = x w^T + b with x (batch, in), w (out, in), b (out).
template <typename T>
BasicTensor<T> fully_connected_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                                       const BasicTensor<T>& b);

template <typename T>
DenseGrads<T> fully_connected_backward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                                       const BasicTensor<T>& dy);

/// Row-wise softmax, max-shifted.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits);

template <typename T>
struct SoftmaxLoss {
    double loss = 0.0;  ///< mean over the batch
    BasicTensor<T> probs;
    BasicTensor<T> grad_logits;  ///< (probs - onehot) / batch
};

template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const BasicTensor<T>& logits, std::span<const int> labels);

/// Elementwise sum; its gradient flows unchanged into both operands.
template <typename T>
BasicTensor<T> residual_add(const BasicTensor<T>& main, const BasicTensor<T>& shortcut);

/// Throws NumericError naming `where` when `t` holds a NaN or infinity.
template <typename T>
void require_finite(const BasicTensor<T>& t, const std::string& where);

} // namespace ecg
