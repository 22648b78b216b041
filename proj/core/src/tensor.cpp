#include "mutexnet/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mutexnet {

namespace {

std::size_t checked_volume(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("Tensor: zero dimension in shape " + shape_str(shape));
        n *= d;
    }
    return n;
}

void require_2d(const Tensor& t, const char* who) {
    if (t.rank() != 2) {
        throw std::invalid_argument(std::string(who) + ": expected a 2-d tensor, got shape " + t.shape_str());
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(who) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
}

} // namespace

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_volume(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_volume(shape_) != data_.size()) {
        throw std::invalid_argument("Tensor: shape " + mutexnet::shape_str(shape_) + " does not match data length " +
                                    std::to_string(data_.size()));
    }
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("Tensor: non-finite element " + std::to_string(v));
        }
    }
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("Tensor::full: non-finite fill value");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_.assign(checked_volume(t.shape_), value);
    return t;
}

Tensor Tensor::from_raw(std::vector<std::size_t> shape, std::vector<double> data) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    if (checked_volume(t.shape_) != t.data_.size()) {
        throw std::invalid_argument("Tensor::from_raw: shape " + mutexnet::shape_str(t.shape_) +
                                    " does not match data length " + std::to_string(t.data_.size()));
    }
    return t;
}

Tensor Tensor::reshape(std::vector<std::size_t> new_shape) const& {
    Tensor t = *this;
    return std::move(t).reshape(std::move(new_shape));
}

Tensor Tensor::reshape(std::vector<std::size_t> new_shape) && {
    if (checked_volume(new_shape) != data_.size()) {
        throw std::invalid_argument("Tensor::reshape: cannot view " + shape_str() + " as " + mutexnet::shape_str(new_shape));
    }
    shape_ = std::move(new_shape);
    return std::move(*this);
}

std::string Tensor::shape_str() const { return mutexnet::shape_str(shape_); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw std::invalid_argument("matmul: inner dimensions disagree, " + a.shape_str() + " x " + b.shape_str());
    }
    std::vector<double> c(m * n, 0.0);
    const double* pa = a.data();
    const double* pb = b.data();
    // i-k-j ordering: for each output element the k contributions are added
    // in ascending k, identical to the naive i-j-k accumulation order.
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = &c[i * n];
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = pa[i * k + kk];
            const double* brow = &pb[kk * n];
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
    return Tensor::from_raw({m, n}, std::move(c));
}

Tensor transpose(const Tensor& a) {
    require_2d(a, "transpose");
    const std::size_t r = a.dim(0), c = a.dim(1);
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.data()[i * c + j];
    return Tensor::from_raw({c, r}, std::move(out));
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return Tensor::from_raw(a.shape(), std::move(out));
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    return Tensor::from_raw(a.shape(), std::move(out));
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return Tensor::from_raw(a.shape(), std::move(out));
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * s;
    return Tensor::from_raw(a.shape(), std::move(out));
}

Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
    require_2d(a, "slice_rows");
    if (r0 > r1 || r1 > a.dim(0)) {
        throw std::invalid_argument("slice_rows: range [" + std::to_string(r0) + ", " + std::to_string(r1) +
                                    ") out of bounds for " + a.shape_str());
    }
    const std::size_t w = a.dim(1);
    std::vector<double> out(a.data() + r0 * w, a.data() + r1 * w);
    return Tensor::from_raw({r1 - r0, w}, std::move(out));
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    require_2d(a, "concat_rows");
    require_2d(b, "concat_rows");
    if (a.dim(1) != b.dim(1)) {
        throw std::invalid_argument("concat_rows: widths disagree, " + a.shape_str() + " vs " + b.shape_str());
    }
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.data(), a.data() + a.size());
    out.insert(out.end(), b.data(), b.data() + b.size());
    return Tensor::from_raw({a.dim(0) + b.dim(0), a.dim(1)}, std::move(out));
}

Tensor rand_uniform(Rng& rng, std::vector<std::size_t> shape, double lo, double hi) {
    if (!(lo < hi)) {
        throw std::invalid_argument("rand_uniform: lo must be < hi, got lo=" + std::to_string(lo) +
                                    " hi=" + std::to_string(hi));
    }
    std::size_t n = checked_volume(shape);
    std::vector<double> out(n);
    for (double& v : out) v = rng.uniform(lo, hi);
    return Tensor::from_raw(std::move(shape), std::move(out));
}

} // namespace mutexnet
