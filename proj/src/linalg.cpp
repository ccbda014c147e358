#include "zsl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace zsl {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

static std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: shape mismatch " + shape_str(a) + " * " + shape_str(b));
    Matrix c(a.rows, b.cols, 0.0);
    // k ascending per output entry, matching the naive triple loop exactly
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            const double* brow = b.data.data() + k * b.cols;
            double* crow = c.data.data() + i * c.cols;
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Vector cosine_rows(const Matrix& w, std::span<const double> x) {
    if (w.cols != x.size())
        throw std::invalid_argument("cosine_rows: shape mismatch " + shape_str(w) + " vs x[" +
                                    std::to_string(x.size()) + "]");
    const double nx = norm(x);
    if (nx == 0.0) throw std::invalid_argument("cosine_rows: zero-norm feature vector");
    Vector out(w.rows);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double nw = norm(w.row(i));
        if (nw == 0.0)
            throw std::invalid_argument("cosine_rows: zero-norm classifier row " + std::to_string(i));
        out[i] = dot(w.row(i), x) / (nw * nx);
    }
    return out;
}

Vector softmax(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("softmax: empty input");
    const double m = *std::max_element(v.begin(), v.end());
    Vector out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return out;
}

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("log_sum_exp: empty input");
    const double m = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - m);
    return m + std::log(sum);
}

}  // namespace zsl
