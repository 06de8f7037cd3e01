#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "adapedit/matrix.hpp"

namespace adapedit::testing {

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, float lo = -1.0f,
                            float hi = 1.0f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    Matrix m(rows, cols);
    for (float& v : m.data()) v = dist(rng);
    return m;
}

// Rows are non-negative and sum to one (accumulated in double, then rescaled).
inline Matrix random_row_stochastic(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    Matrix m = random_matrix(rng, rows, cols, 0.0f, 1.0f);
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (float v : m.row(r)) s += v;
        for (float& v : m.row(r)) v = static_cast<float>(v / s);
    }
    return m;
}

inline std::vector<double> naive_matmul(const Matrix& a, const Matrix& b) {
    std::vector<double> out(a.rows() * b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<double>(a(i, k)) * b(k, j);
            out[i * b.cols() + j] = s;
        }
    return out;
}

inline double relative_frobenius_error(const Matrix& got, const std::vector<double>& want) {
    double num = 0.0, den = 0.0;
    const auto g = got.data();
    for (std::size_t i = 0; i < want.size(); ++i) {
        num += (g[i] - want[i]) * (g[i] - want[i]);
        den += want[i] * want[i];
    }
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

inline std::vector<long double> softmax_oracle(const std::vector<long double>& x) {
    long double s = 0.0L;
    std::vector<long double> out;
    for (long double v : x) s += std::exp(v);
    for (long double v : x) out.push_back(std::exp(v) / s);
    return out;
}

inline double row_sum(const Matrix& m, std::size_t r) {
    double s = 0.0;
    for (float v : m.row(r)) s += v;
    return s;
}

inline double col_sum(const Matrix& m, std::size_t c) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, c);
    return s;
}

// 64-bit FNV-1a, used for golden digests.
inline std::uint64_t fnv1a(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace adapedit::testing
