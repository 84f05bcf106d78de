#include "mstnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace mstnet {

namespace {

size_t shape_size(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("non-positive dimension in shape");
        n *= static_cast<size_t>(d);
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

Tensor make_result(std::vector<int> shape, std::vector<double> data,
                   std::vector<Tensor> inputs, std::function<void()> backprop) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    for (const auto& in : inputs) {
        if (in.impl() && in.impl()->requires_grad) impl->requires_grad = true;
    }
    if (impl->requires_grad) {
        for (const auto& in : inputs) impl->parents.push_back(in.impl());
        impl->backprop = std::move(backprop);
    }
#ifndef NDEBUG
    for (double v : impl->data) {
        if (!std::isfinite(v)) throw NumericError("non-finite value produced by forward op");
    }
#endif
    return Tensor(impl);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    auto impl = std::make_shared<TensorImpl>();
    impl->data.assign(shape_size(shape), 0.0);
    impl->shape = std::move(shape);
    impl->requires_grad = requires_grad;
    return Tensor(impl);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.data().begin(), t.data().end(), value);
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    if (shape_size(shape) != data.size()) {
        throw DimensionError("Tensor::from: data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    }
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return Tensor(impl);
}

Tensor Tensor::randn(std::vector<int> shape, Rng& rng, double scale, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& v : t.data()) v = rng.normal() * scale;
    return t;
}

const std::vector<int>& Tensor::shape() const { return impl_->shape; }
int Tensor::dim(int axis) const { return impl_->shape.at(static_cast<size_t>(axis)); }
size_t Tensor::size() const { return impl_->data.size(); }
bool Tensor::requires_grad() const { return impl_->requires_grad; }
std::vector<double>& Tensor::data() { return impl_->data; }
const std::vector<double>& Tensor::data() const { return impl_->data; }
std::vector<double>& Tensor::grad() {
    impl_->ensure_grad();
    return impl_->grad;
}
const std::vector<double>& Tensor::grad() const {
    impl_->ensure_grad();
    return impl_->grad;
}
bool Tensor::has_grad() const { return impl_->grad.size() == impl_->data.size(); }
void Tensor::zero_grad() { impl_->grad.assign(impl_->data.size(), 0.0); }

double Tensor::value() const {
    if (impl_->data.size() != 1) throw DimensionError("value(): tensor is not scalar");
    return impl_->data[0];
}

// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    auto ai = a.impl(), bi = b.impl();
    Tensor result = make_result(a.shape(), std::move(out), {a, b}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ai, bi, oi] {
            ai->ensure_grad();
            bi->ensure_grad();
            for (size_t i = 0; i < oi->grad.size(); ++i) {
                ai->grad[i] += oi->grad[i];
                bi->grad[i] += oi->grad[i];
            }
        };
    }
    return result;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    auto ai = a.impl(), bi = b.impl();
    Tensor result = make_result(a.shape(), std::move(out), {a, b}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ai, bi, oi] {
            ai->ensure_grad();
            bi->ensure_grad();
            for (size_t i = 0; i < oi->grad.size(); ++i) {
                ai->grad[i] += oi->grad[i];
                bi->grad[i] -= oi->grad[i];
            }
        };
    }
    return result;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    auto ai = a.impl(), bi = b.impl();
    Tensor result = make_result(a.shape(), std::move(out), {a, b}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ai, bi, oi] {
            ai->ensure_grad();
            bi->ensure_grad();
            for (size_t i = 0; i < oi->grad.size(); ++i) {
                ai->grad[i] += oi->grad[i] * bi->data[i];
                bi->grad[i] += oi->grad[i] * ai->data[i];
            }
        };
    }
    return result;
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
    auto ai = a.impl();
    Tensor result = make_result(a.shape(), std::move(out), {a}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ai, oi, c] {
            ai->ensure_grad();
            for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i] * c;
        };
    }
    return result;
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    auto ai = a.impl();
    Tensor result = make_result(a.shape(), std::move(out), {a}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ai, oi] {
            ai->ensure_grad();
            for (size_t i = 0; i < oi->grad.size(); ++i) {
                if (ai->data[i] > 0.0) ai->grad[i] += oi->grad[i];
            }
        };
    }
    return result;
}

Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto ai = a.impl();
    Tensor result = make_result({1}, {s}, {a}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ai, oi] {
            ai->ensure_grad();
            for (size_t i = 0; i < ai->grad.size(); ++i) ai->grad[i] += oi->grad[0];
        };
    }
    return result;
}

Tensor reshape(const Tensor& a, std::vector<int> new_shape) {
    if (shape_size(new_shape) != a.size()) {
        throw DimensionError("reshape: size mismatch " + shape_str(a.shape()) + " -> " +
                             shape_str(new_shape));
    }
    auto ai = a.impl();
    Tensor result = make_result(std::move(new_shape), a.data(), {a}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ai, oi] {
            ai->ensure_grad();
            for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
        };
    }
    return result;
}

Tensor transpose(const Tensor& a) {
    if (a.shape().size() != 2) throw DimensionError("transpose: expected 2-D tensor");
    int r = a.dim(0), c = a.dim(1);
    std::vector<double> out(a.size());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[static_cast<size_t>(j) * r + i] = a.data()[static_cast<size_t>(i) * c + j];
    auto ai = a.impl();
    Tensor result = make_result({c, r}, std::move(out), {a}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ai, oi, r, c] {
            ai->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    ai->grad[static_cast<size_t>(i) * c + j] += oi->grad[static_cast<size_t>(j) * r + i];
        };
    }
    return result;
}

Tensor slice_cols(const Tensor& a, int start, int width) {
    if (a.shape().size() != 2) throw DimensionError("slice_cols: expected 2-D tensor");
    int r = a.dim(0), c = a.dim(1);
    if (start < 0 || width < 1 || start + width > c) {
        throw DimensionError("slice_cols: range [" + std::to_string(start) + "," +
                             std::to_string(start + width) + ") out of " + std::to_string(c));
    }
    std::vector<double> out(static_cast<size_t>(r) * width);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < width; ++j)
            out[static_cast<size_t>(i) * width + j] = a.data()[static_cast<size_t>(i) * c + start + j];
    auto ai = a.impl();
    Tensor result = make_result({r, width}, std::move(out), {a}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ai, oi, r, c, start, width] {
            ai->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < width; ++j)
                    ai->grad[static_cast<size_t>(i) * c + start + j] +=
                        oi->grad[static_cast<size_t>(i) * width + j];
        };
    }
    return result;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: empty input list");
    int r = parts[0].dim(0);
    int total = 0;
    for (const auto& p : parts) {
        if (p.shape().size() != 2 || p.dim(0) != r)
            throw DimensionError("concat_cols: row-count mismatch");
        total += p.dim(1);
    }
    std::vector<double> out(static_cast<size_t>(r) * total);
    int off = 0;
    for (const auto& p : parts) {
        int w = p.dim(1);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < w; ++j)
                out[static_cast<size_t>(i) * total + off + j] = p.data()[static_cast<size_t>(i) * w + j];
        off += w;
    }
    std::vector<std::shared_ptr<TensorImpl>> impls;
    for (const auto& p : parts) impls.push_back(p.impl());
    Tensor result = make_result({r, total}, std::move(out), parts, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [impls, oi, r, total] {
            int off2 = 0;
            for (auto& pi : impls) {
                int w = pi->shape[1];
                pi->ensure_grad();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < w; ++j)
                        pi->grad[static_cast<size_t>(i) * w + j] +=
                            oi->grad[static_cast<size_t>(i) * total + off2 + j];
                off2 += w;
            }
        };
    }
    return result;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2)
        throw DimensionError("matmul: expected 2-D tensors");
    int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2)
        throw DimensionError("matmul: inner dimensions " + std::to_string(k) + " vs " +
                             std::to_string(k2));
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
    const auto& ad = a.data();
    const auto& bd = b.data();
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            double av = ad[static_cast<size_t>(i) * k + p];
            if (av == 0.0) continue;
            const double* brow = &bd[static_cast<size_t>(p) * n];
            double* orow = &out[static_cast<size_t>(i) * n];
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    auto ai = a.impl(), bi = b.impl();
    Tensor result = make_result({m, n}, std::move(out), {a, b}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ai, bi, oi, m, k, n] {
            ai->ensure_grad();
            bi->ensure_grad();
            // dA = dOut · B^T ; dB = A^T · dOut
            for (int i = 0; i < m; ++i) {
                const double* grow = &oi->grad[static_cast<size_t>(i) * n];
                for (int p = 0; p < k; ++p) {
                    const double* brow = &bi->data[static_cast<size_t>(p) * n];
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
                    ai->grad[static_cast<size_t>(i) * k + p] += acc;
                    double av = ai->data[static_cast<size_t>(i) * k + p];
                    if (av != 0.0) {
                        double* bgrow = &bi->grad[static_cast<size_t>(p) * n];
                        for (int j = 0; j < n; ++j) bgrow[j] += av * grow[j];
                    }
                }
            }
        };
    }
    return result;
}

Tensor add_row_bias(const Tensor& input, const Tensor& bias) {
    if (input.shape().size() != 2 || bias.shape().size() != 1 || input.dim(1) != bias.dim(0))
        throw DimensionError("add_row_bias: input " + shape_str(input.shape()) + " vs bias " +
                             shape_str(bias.shape()));
    int r = input.dim(0), c = input.dim(1);
    std::vector<double> out(input.size());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            out[static_cast<size_t>(i) * c + j] = input.data()[static_cast<size_t>(i) * c + j] + bias.data()[j];
    auto ii = input.impl(), bi = bias.impl();
    Tensor result = make_result(input.shape(), std::move(out), {input, bias}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ii, bi, oi, r, c] {
            ii->ensure_grad();
            bi->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) {
                    double g = oi->grad[static_cast<size_t>(i) * c + j];
                    ii->grad[static_cast<size_t>(i) * c + j] += g;
                    bi->grad[j] += g;
                }
        };
    }
    return result;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    if (input.dim(1) != weight.dim(0))
        throw DimensionError("linear: input columns " + std::to_string(input.dim(1)) +
                             " vs weight rows " + std::to_string(weight.dim(0)));
    return add_row_bias(matmul(input, weight), bias);
}

Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int padding, int stride) {
    if (input.shape().size() != 2) throw DimensionError("conv1d: input must be [C_in x T]");
    if (weight.shape().size() != 3) throw DimensionError("conv1d: weight must be [C_out x C_in x K]");
    int cin = input.dim(0), t = input.dim(1);
    int cout = weight.dim(0), wcin = weight.dim(1), k = weight.dim(2);
    if (cin != wcin)
        throw DimensionError("conv1d: input channel axis " + std::to_string(cin) +
                             " vs weight channel axis " + std::to_string(wcin));
    if (bias.shape().size() != 1 || bias.dim(0) != cout)
        throw DimensionError("conv1d: bias axis " + shape_str(bias.shape()) + " vs C_out " +
                             std::to_string(cout));
    if (k < 1 || padding < 0 || stride < 1 || t + 2 * padding < k)
        throw DimensionError("conv1d: invalid geometry (T=" + std::to_string(t) + ", K=" +
                             std::to_string(k) + ", pad=" + std::to_string(padding) + ")");
    int tout = (t + 2 * padding - k) / stride + 1;
    std::vector<double> out(static_cast<size_t>(cout) * tout);
    const auto& id = input.data();
    const auto& wd = weight.data();
    for (int co = 0; co < cout; ++co) {
        for (int to = 0; to < tout; ++to) {
            double acc = bias.data()[co];
            int base = to * stride - padding;
            for (int ci = 0; ci < cin; ++ci) {
                const double* irow = &id[static_cast<size_t>(ci) * t];
                const double* wrow = &wd[(static_cast<size_t>(co) * cin + ci) * k];
                int lo = std::max(0, -base);
                int hi = std::min(k, t - base);
                for (int kk = lo; kk < hi; ++kk) acc += irow[base + kk] * wrow[kk];
            }
            out[static_cast<size_t>(co) * tout + to] = acc;
        }
    }
    auto ii = input.impl(), wi = weight.impl(), bi = bias.impl();
    Tensor result = make_result({cout, tout}, std::move(out), {input, weight, bias}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ii, wi, bi, oi, cin, t, cout, k, tout, padding, stride] {
            ii->ensure_grad();
            wi->ensure_grad();
            bi->ensure_grad();
            for (int co = 0; co < cout; ++co) {
                for (int to = 0; to < tout; ++to) {
                    double g = oi->grad[static_cast<size_t>(co) * tout + to];
                    if (g == 0.0) continue;
                    bi->grad[co] += g;
                    int base = to * stride - padding;
                    for (int ci = 0; ci < cin; ++ci) {
                        double* igrow = &ii->grad[static_cast<size_t>(ci) * t];
                        const double* irow = &ii->data[static_cast<size_t>(ci) * t];
                        const double* wrow = &wi->data[(static_cast<size_t>(co) * cin + ci) * k];
                        double* wgrow = &wi->grad[(static_cast<size_t>(co) * cin + ci) * k];
                        int lo = std::max(0, -base);
                        int hi = std::min(k, t - base);
                        for (int kk = lo; kk < hi; ++kk) {
                            igrow[base + kk] += g * wrow[kk];
                            wgrow[kk] += g * irow[base + kk];
                        }
                    }
                }
            }
        };
    }
    return result;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride_h, int stride_w) {
    if (input.shape().size() != 3) throw DimensionError("conv2d: input must be [C_in x H x W]");
    if (weight.shape().size() != 4)
        throw DimensionError("conv2d: weight must be [C_out x C_in x KH x KW]");
    int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
    int cout = weight.dim(0), wcin = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
    if (cin != wcin)
        throw DimensionError("conv2d: input channel axis " + std::to_string(cin) +
                             " vs weight channel axis " + std::to_string(wcin));
    if (h < kh || w < kw)
        throw DimensionError("conv2d: kernel (" + std::to_string(kh) + "," + std::to_string(kw) +
                             ") exceeds input (" + std::to_string(h) + "," + std::to_string(w) + ")");
    if (bias.dim(0) != cout) throw DimensionError("conv2d: bias axis mismatch");
    int hout = (h - kh) / stride_h + 1;
    int wout = (w - kw) / stride_w + 1;
    std::vector<double> out(static_cast<size_t>(cout) * hout * wout);
    const auto& id = input.data();
    const auto& wd = weight.data();
    for (int co = 0; co < cout; ++co) {
        for (int ho = 0; ho < hout; ++ho) {
            for (int wo = 0; wo < wout; ++wo) {
                double acc = bias.data()[co];
                int hbase = ho * stride_h, wbase = wo * stride_w;
                for (int ci = 0; ci < cin; ++ci) {
                    for (int ki = 0; ki < kh; ++ki) {
                        const double* irow = &id[(static_cast<size_t>(ci) * h + hbase + ki) * w + wbase];
                        const double* wrow = &wd[((static_cast<size_t>(co) * cin + ci) * kh + ki) * kw];
                        for (int kj = 0; kj < kw; ++kj) acc += irow[kj] * wrow[kj];
                    }
                }
                out[(static_cast<size_t>(co) * hout + ho) * wout + wo] = acc;
            }
        }
    }
    auto ii = input.impl(), wi = weight.impl(), bi = bias.impl();
    Tensor result = make_result({cout, hout, wout}, std::move(out), {input, weight, bias}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ii, wi, bi, oi, cin, h, w, cout, kh, kw, hout, wout, stride_h, stride_w] {
            ii->ensure_grad();
            wi->ensure_grad();
            bi->ensure_grad();
            for (int co = 0; co < cout; ++co) {
                for (int ho = 0; ho < hout; ++ho) {
                    for (int wo = 0; wo < wout; ++wo) {
                        double g = oi->grad[(static_cast<size_t>(co) * hout + ho) * wout + wo];
                        if (g == 0.0) continue;
                        bi->grad[co] += g;
                        int hbase = ho * stride_h, wbase = wo * stride_w;
                        for (int ci = 0; ci < cin; ++ci) {
                            for (int ki = 0; ki < kh; ++ki) {
                                size_t ibase = (static_cast<size_t>(ci) * h + hbase + ki) * w + wbase;
                                size_t wbase2 = ((static_cast<size_t>(co) * cin + ci) * kh + ki) * kw;
                                for (int kj = 0; kj < kw; ++kj) {
                                    ii->grad[ibase + kj] += g * wi->data[wbase2 + kj];
                                    wi->grad[wbase2 + kj] += g * ii->data[ibase + kj];
                                }
                            }
                        }
                    }
                }
            }
        };
    }
    return result;
}

Tensor stack_planes(const std::vector<Tensor>& planes) {
    if (planes.empty()) throw DimensionError("stack_planes: empty input list");
    int c = planes[0].dim(0), t = planes[0].dim(1);
    int n = static_cast<int>(planes.size());
    for (const auto& p : planes) {
        if (p.shape().size() != 2 || p.dim(0) != c || p.dim(1) != t)
            throw DimensionError("stack_planes: plane shape mismatch");
    }
    std::vector<double> out(static_cast<size_t>(c) * n * t);
    for (int s = 0; s < n; ++s) {
        const auto& pd = planes[static_cast<size_t>(s)].data();
        for (int ci = 0; ci < c; ++ci)
            for (int ti = 0; ti < t; ++ti)
                out[(static_cast<size_t>(ci) * n + s) * t + ti] = pd[static_cast<size_t>(ci) * t + ti];
    }
    std::vector<std::shared_ptr<TensorImpl>> impls;
    for (const auto& p : planes) impls.push_back(p.impl());
    Tensor result = make_result({c, n, t}, std::move(out), planes, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [impls, oi, c, n, t] {
            for (int s = 0; s < n; ++s) {
                auto& pi = impls[static_cast<size_t>(s)];
                pi->ensure_grad();
                for (int ci = 0; ci < c; ++ci)
                    for (int ti = 0; ti < t; ++ti)
                        pi->grad[static_cast<size_t>(ci) * t + ti] +=
                            oi->grad[(static_cast<size_t>(ci) * n + s) * t + ti];
            }
        };
    }
    return result;
}

namespace {

void softmax_forward(const std::vector<double>& in, std::vector<double>& out, int r, int c,
                     bool log_domain) {
    for (int i = 0; i < r; ++i) {
        const double* row = &in[static_cast<size_t>(i) * c];
        double* orow = &out[static_cast<size_t>(i) * c];
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (int j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        if (log_domain) {
            double lz = std::log(z) + mx;
            for (int j = 0; j < c; ++j) orow[j] = row[j] - lz;
        } else {
            for (int j = 0; j < c; ++j) orow[j] = std::exp(row[j] - mx) / z;
        }
    }
}

}  // namespace

Tensor softmax_rows(const Tensor& input) {
    if (input.shape().size() != 2) throw DimensionError("softmax_rows: expected 2-D tensor");
    int r = input.dim(0), c = input.dim(1);
    std::vector<double> out(input.size());
    softmax_forward(input.data(), out, r, c, false);
    auto ii = input.impl();
    Tensor result = make_result(input.shape(), std::move(out), {input}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ii, oi, r, c] {
            ii->ensure_grad();
            for (int i = 0; i < r; ++i) {
                const double* y = &oi->data[static_cast<size_t>(i) * c];
                const double* dy = &oi->grad[static_cast<size_t>(i) * c];
                double dot = 0.0;
                for (int j = 0; j < c; ++j) dot += y[j] * dy[j];
                double* dx = &ii->grad[static_cast<size_t>(i) * c];
                for (int j = 0; j < c; ++j) dx[j] += y[j] * (dy[j] - dot);
            }
        };
    }
    return result;
}

Tensor log_softmax_rows(const Tensor& input) {
    if (input.shape().size() != 2) throw DimensionError("log_softmax_rows: expected 2-D tensor");
    int r = input.dim(0), c = input.dim(1);
    std::vector<double> out(input.size());
    softmax_forward(input.data(), out, r, c, true);
    auto ii = input.impl();
    Tensor result = make_result(input.shape(), std::move(out), {input}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ii, oi, r, c] {
            ii->ensure_grad();
            for (int i = 0; i < r; ++i) {
                const double* lsm = &oi->data[static_cast<size_t>(i) * c];
                const double* dy = &oi->grad[static_cast<size_t>(i) * c];
                double sum = 0.0;
                for (int j = 0; j < c; ++j) sum += dy[j];
                double* dx = &ii->grad[static_cast<size_t>(i) * c];
                for (int j = 0; j < c; ++j) dx[j] += dy[j] - std::exp(lsm[j]) * sum;
            }
        };
    }
    return result;
}

Tensor layer_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta, double eps) {
    if (input.shape().size() != 2) throw DimensionError("layer_norm: expected 2-D tensor");
    int r = input.dim(0), c = input.dim(1);
    if (c < 2) throw DimensionError("layer_norm: needs at least 2 columns");
    if (gamma.dim(0) != c || beta.dim(0) != c)
        throw DimensionError("layer_norm: gamma/beta axis mismatch");
    std::vector<double> out(input.size());
    std::vector<double> xhat(input.size());
    std::vector<double> inv_std(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i) {
        const double* row = &input.data()[static_cast<size_t>(i) * c];
        double mean = 0.0;
        for (int j = 0; j < c; ++j) mean += row[j];
        mean /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= c;
        double istd = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<size_t>(i)] = istd;
        for (int j = 0; j < c; ++j) {
            double xh = (row[j] - mean) * istd;
            xhat[static_cast<size_t>(i) * c + j] = xh;
            out[static_cast<size_t>(i) * c + j] = gamma.data()[j] * xh + beta.data()[j];
        }
    }
    auto ii = input.impl(), gi = gamma.impl(), bi = beta.impl();
    Tensor result = make_result(input.shape(), std::move(out), {input, gamma, beta}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ii, gi, bi, oi, r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
            ii->ensure_grad();
            gi->ensure_grad();
            bi->ensure_grad();
            for (int i = 0; i < r; ++i) {
                const double* dy = &oi->grad[static_cast<size_t>(i) * c];
                const double* xh = &xhat[static_cast<size_t>(i) * c];
                double istd = inv_std[static_cast<size_t>(i)];
                double m1 = 0.0, m2 = 0.0;
                for (int j = 0; j < c; ++j) {
                    double gdy = gi->data[j] * dy[j];
                    m1 += gdy;
                    m2 += gdy * xh[j];
                    gi->grad[j] += dy[j] * xh[j];
                    bi->grad[j] += dy[j];
                }
                m1 /= c;
                m2 /= c;
                double* dx = &ii->grad[static_cast<size_t>(i) * c];
                for (int j = 0; j < c; ++j)
                    dx[j] += (gi->data[j] * dy[j] - m1 - xh[j] * m2) * istd;
            }
        };
    }
    return result;
}

Tensor grad_mask_rows(const Tensor& input, std::vector<double> mask) {
    if (input.shape().size() != 2) throw DimensionError("grad_mask_rows: expected 2-D tensor");
    int r = input.dim(0), c = input.dim(1);
    if (static_cast<int>(mask.size()) != r)
        throw DimensionError("grad_mask_rows: mask length " + std::to_string(mask.size()) +
                             " vs rows " + std::to_string(r));
    auto ii = input.impl();
    Tensor result = make_result(input.shape(), input.data(), {input}, nullptr);
    TensorImpl* oi = result.impl().get();
    if (result.requires_grad()) {
        oi->backprop = [ii, oi, r, c, mask = std::move(mask)] {
            ii->ensure_grad();
            for (int i = 0; i < r; ++i) {
                double m = mask[static_cast<size_t>(i)];
                if (m == 0.0) continue;
                for (int j = 0; j < c; ++j)
                    ii->grad[static_cast<size_t>(i) * c + j] += m * oi->grad[static_cast<size_t>(i) * c + j];
            }
        };
    }
    return result;
}

void backward(const Tensor& loss) {
    if (loss.size() != 1) throw DimensionError("backward: loss must be scalar");
    // Topological order over the recorded tape.
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> seen;
    std::vector<std::pair<TensorImpl*, size_t>> stack;
    stack.push_back({loss.impl().get(), 0});
    seen.insert(loss.impl().get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            TensorImpl* p = node->parents[idx++].get();
            if (seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    loss.impl()->ensure_grad();
    loss.impl()->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backprop) {
            (*it)->ensure_grad();
            (*it)->backprop();
        }
    }
    // Free the tape.
    for (TensorImpl* node : order) {
        if (node->backprop) {
            node->backprop = nullptr;
            node->parents.clear();
        }
    }
}

void adam_init(AdamState& state, const std::vector<Tensor>& params) {
    state.m.clear();
    state.v.clear();
    state.step = 0;
    for (const auto& p : params) {
        state.m.emplace_back(p.size(), 0.0);
        state.v.emplace_back(p.size(), 0.0);
    }
}

void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamConfig& cfg) {
    if (state.m.size() != params.size())
        throw ConfigError("adam_step: state not initialized for this parameter list");
    state.step += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi].data();
        const auto& g = params[pi].grad();
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        for (size_t i = 0; i < p.size(); ++i) {
            double grad = g[i] + cfg.weight_decay * p[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad * grad;
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

void check_finite(const Tensor& t, const std::string& where) {
    for (double v : t.data()) {
        if (!std::isfinite(v)) throw NumericError("non-finite value in " + where);
    }
}

}  // namespace mstnet
