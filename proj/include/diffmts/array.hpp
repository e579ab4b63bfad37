#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

#include "diffmts/errors.hpp"

namespace diffmts {

using Shape = std::vector<std::size_t>;

class Array;
// Named arrays keyed by dot-separated path: model parameters, gradients,
// optimizer moments.
using ParamMap = std::map<std::string, Array>;

std::size_t shape_count(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major array of doubles. Rank 0 is not used; scalars are shape {1}.
class Array {
public:
    Array() = default;
    explicit Array(Shape shape);  // zero-filled
    Array(Shape shape, std::vector<double> values);

    static Array zeros(Shape shape) { return Array(std::move(shape)); }
    static Array full(Shape shape, double v);
    static Array scalar(double v) { return Array({1}, {v}); }
    static Array from(std::initializer_list<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_[axis]; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    // Row-major accessors for the common ranks.
    double& at(std::size_t i, std::size_t j) { return values_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return values_[i * shape_[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }

    bool same_shape(const Array& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    void fill(double v);

private:
    Shape shape_;
    std::vector<double> values_;
};

void require_same_shape(const Array& a, const Array& b, const char* what);

}  // namespace diffmts
