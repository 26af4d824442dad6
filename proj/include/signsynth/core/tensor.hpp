#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "signsynth/errors.hpp"

namespace signsynth::nn {

// Dense row-major n-d array of scalars. Value type: copying copies data.
template <typename S>
class TensorT {
  public:
    TensorT() = default;

    explicit TensorT(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(count(shape_), S(0));
    }

    TensorT(std::vector<int> shape, std::vector<S> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<std::int64_t>(data_.size()) != count(shape_))
            throw Error("tensor: data size does not match shape");
    }

    static TensorT zeros(std::vector<int> shape) { return TensorT(std::move(shape)); }

    static TensorT full(std::vector<int> shape, S v) {
        TensorT t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }

    static TensorT scalar(S v) { return full({1}, v); }

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    S* data() { return data_.data(); }
    const S* data() const { return data_.data(); }

    S& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    S operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    S& at2(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
    S at2(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }

    S& at3(int a, int b, int c) {
        return data_[(static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c];
    }
    S at3(int a, int b, int c) const {
        return data_[(static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c];
    }

    S& at4(int n, int c, int y, int x) {
        return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
    }
    S at4(int n, int c, int y, int x) const {
        return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
    }

    bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

    TensorT reshaped(std::vector<int> shape) const {
        if (count(shape) != size()) throw Error("tensor: reshape element count mismatch");
        return TensorT(std::move(shape), data_);
    }

    bool all_finite() const {
        for (S v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    static std::int64_t count(const std::vector<int>& shape) {
        std::int64_t n = 1;
        for (int d : shape) {
            if (d < 0) throw Error("tensor: negative dimension");
            n *= d;
        }
        return n;
    }

  private:
    std::vector<int> shape_;
    std::vector<S> data_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace signsynth::nn
