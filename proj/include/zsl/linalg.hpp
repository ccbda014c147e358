#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace zsl {

using Vector = std::vector<double>;

// Dense row-major matrix of 64-bit floats.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    bool operator==(const Matrix& o) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
bool all_finite(std::span<const double> a);

Matrix matmul(const Matrix& a, const Matrix& b);

// Per-row cosine similarity against x. Throws on a zero-norm row or zero-norm x.
Vector cosine_rows(const Matrix& w, std::span<const double> x);

// Max-subtracted, numerically stable.
Vector softmax(std::span<const double> v);
double log_sum_exp(std::span<const double> v);

}  // namespace zsl
