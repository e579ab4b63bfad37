#include "diffmts/array.hpp"

#include <cmath>
#include <sstream>

namespace diffmts {

std::size_t shape_count(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Array::Array(Shape shape) : shape_(std::move(shape)), values_(shape_count(shape_), 0.0) {}

Array::Array(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_count(shape_) != values_.size()) {
        throw ShapeError("array shape " + shape_str(shape_) + " does not match value count " +
                         std::to_string(values_.size()));
    }
}

Array Array::full(Shape shape, double v) {
    Array a(std::move(shape));
    a.fill(v);
    return a;
}

Array Array::from(std::initializer_list<double> values) {
    return Array({values.size()}, std::vector<double>(values));
}

bool Array::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Array::fill(double v) {
    for (double& x : values_) x = v;
}

void require_same_shape(const Array& a, const Array& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    }
}

}  // namespace diffmts
