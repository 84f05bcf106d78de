#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mstnet/errors.hpp"
#include "mstnet/rng.hpp"

namespace mstnet {

struct TensorImpl;

// Dense row-major 64-bit real array participating in reverse-mode
// differentiation. Value-semantic handle over a shared node; ops record a
// define-by-run tape that backward() consumes and frees.
class Tensor {
 public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor randn(std::vector<int> shape, Rng& rng, double scale,
                        bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const;
    int dim(int axis) const;
    size_t size() const;
    bool requires_grad() const;

    std::vector<double>& data();
    const std::vector<double>& data() const;
    std::vector<double>& grad();            // allocated lazily, zero-filled
    const std::vector<double>& grad() const;
    bool has_grad() const;
    void zero_grad();

    double value() const;  // scalar convenience, size must be 1

    std::shared_ptr<TensorImpl> impl() const { return impl_; }
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
    std::shared_ptr<TensorImpl> impl_;
};

struct TensorImpl {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorImpl>> parents;
    std::function<void()> backprop;  // reads this->grad, accumulates into parents

    size_t size() const { return data.size(); }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

// ---- elementwise / shape ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // hadamard
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor sum_all(const Tensor& a);  // -> scalar [1]
Tensor reshape(const Tensor& a, std::vector<int> new_shape);
Tensor transpose(const Tensor& a);                        // 2-D
Tensor slice_cols(const Tensor& a, int start, int width); // 2-D
Tensor concat_cols(const std::vector<Tensor>& parts);     // 2-D, equal rows

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);                    // [m×k]·[k×n]
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);
Tensor add_row_bias(const Tensor& input, const Tensor& bias);       // [T×C]+[C]

// ---- convolutions ----
Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int padding, int stride);
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride_h, int stride_w);
Tensor stack_planes(const std::vector<Tensor>& planes);  // n×[C×T] -> [C×n×T]

// ---- normalization ----
Tensor softmax_rows(const Tensor& input);
Tensor log_softmax_rows(const Tensor& input);
Tensor layer_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  double eps);

// Forward identity; backward multiplies each row's gradient by mask[row].
Tensor grad_mask_rows(const Tensor& input, std::vector<double> mask);

// Runs the reverse pass from a scalar loss, populating grads of all
// reachable requires_grad leaves, then frees the tape.
void backward(const Tensor& loss);

// ---- optimizer ----
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    uint64_t step = 0;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

void adam_init(AdamState& state, const std::vector<Tensor>& params);
void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamConfig& cfg);

// Debug aid: throws NumericError if any entry is NaN/Inf.
void check_finite(const Tensor& t, const std::string& where);

}  // namespace mstnet
