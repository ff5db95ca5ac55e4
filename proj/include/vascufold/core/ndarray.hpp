#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <vector>

#include "vascufold/core/errors.hpp"

namespace vf {

// Dense row-major n-d array. Rank is dynamic (1..5 in practice).
template <typename T>
class NdArray {
public:
    NdArray() = default;

    explicit NdArray(std::vector<int64_t> dims, T fill = T{}) : dims_(std::move(dims)) {
        int64_t n = 1;
        for (int64_t d : dims_) {
            if (d <= 0) throw ShapeError("NdArray: nonpositive dimension");
            n *= d;
        }
        data_.assign(static_cast<size_t>(n), fill);
        compute_strides();
    }

    NdArray(std::initializer_list<int64_t> dims, T fill = T{})
        : NdArray(std::vector<int64_t>(dims), fill) {}

    const std::vector<int64_t>& dims() const { return dims_; }
    int64_t dim(size_t i) const { return dims_[i]; }
    size_t rank() const { return dims_.size(); }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    T& at(int64_t i, int64_t j) { return data_[static_cast<size_t>(i * strides_[0] + j)]; }
    const T& at(int64_t i, int64_t j) const { return data_[static_cast<size_t>(i * strides_[0] + j)]; }

    T& at(int64_t i, int64_t j, int64_t k) {
        return data_[static_cast<size_t>(i * strides_[0] + j * strides_[1] + k)];
    }
    const T& at(int64_t i, int64_t j, int64_t k) const {
        return data_[static_cast<size_t>(i * strides_[0] + j * strides_[1] + k)];
    }

    T& at(int64_t i, int64_t j, int64_t k, int64_t l) {
        return data_[static_cast<size_t>(i * strides_[0] + j * strides_[1] + k * strides_[2] + l)];
    }
    const T& at(int64_t i, int64_t j, int64_t k, int64_t l) const {
        return data_[static_cast<size_t>(i * strides_[0] + j * strides_[1] + k * strides_[2] + l)];
    }

    int64_t stride(size_t i) const { return strides_[i]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_dims(const NdArray& other) const { return dims_ == other.dims_; }

    static std::string dims_str(const std::vector<int64_t>& d) {
        std::ostringstream os;
        os << "[";
        for (size_t i = 0; i < d.size(); ++i) os << (i ? "," : "") << d[i];
        os << "]";
        return os.str();
    }

    friend bool operator==(const NdArray& a, const NdArray& b) {
        return a.dims_ == b.dims_ && a.data_ == b.data_;
    }

private:
    void compute_strides() {
        strides_.assign(dims_.size(), 1);
        for (size_t i = dims_.size(); i-- > 1;)
            strides_[i - 1] = strides_[i] * dims_[i];
    }

    std::vector<int64_t> dims_;
    std::vector<int64_t> strides_;
    std::vector<T> data_;
};

using Image = NdArray<double>;  // 2D (rows, cols)

inline void require_same_dims(const Image& a, const Image& b, const char* what) {
    if (!a.same_dims(b))
        throw ShapeError(std::string(what) + ": dims " + Image::dims_str(a.dims()) +
                         " vs " + Image::dims_str(b.dims()));
}

}  // namespace vf
