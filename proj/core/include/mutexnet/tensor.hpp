#ifndef MUTEXNET_TENSOR_HPP
#define MUTEXNET_TENSOR_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "mutexnet/rng.hpp"

namespace mutexnet {

/** Dense n-dimensional array of 64-bit floats, row-major.
 *
 * Invariants: product(shape) == data.size(), and every element admitted
 * through a public constructor is finite. Kernels that combine already
 * validated tensors build results through from_raw() and are responsible
 * for keeping them finite.
 */
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape);

    /// Tensor with explicit contents; rejects non-finite values and
    /// shape/data size disagreement.
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double value);

    /// Constructs without the finiteness scan. Internal fast path: the
    /// caller guarantees the data is finite.
    static Tensor from_raw(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// 2-d element access (row, col). Bounds are the caller's problem.
    double& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    /// Same data, new shape. Sizes must agree.
    Tensor reshape(std::vector<std::size_t> new_shape) const&;
    Tensor reshape(std::vector<std::size_t> new_shape) &&;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    /// "[2, 3, 5]" style rendering for error messages.
    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::string shape_str(const std::vector<std::size_t>& shape);

/// Matrix product of a [m x k] by b [k x n]; accumulation over k runs
/// left to right so results are reproducible bit for bit.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Transpose of a 2-d tensor.
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

/// Elementwise map with an arbitrary scalar function.
template <typename F>
Tensor map(const Tensor& a, F f) {
    std::vector<double> out(a.size());
    const double* p = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(p[i]);
    return Tensor::from_raw(a.shape(), std::move(out));
}

/// Copy of rows [r0, r1) of a 2-d tensor.
Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1);

/// Rows of a stacked on top of rows of b (matching widths).
Tensor concat_rows(const Tensor& a, const Tensor& b);

/// I.i.d. uniform samples in [lo, hi). Requires lo < hi.
Tensor rand_uniform(Rng& rng, std::vector<std::size_t> shape, double lo, double hi);

} // namespace mutexnet

#endif // MUTEXNET_TENSOR_HPP
