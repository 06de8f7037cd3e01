#include "adapedit/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adapedit/errors.hpp"

namespace adapedit {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
    }
}

void require_unit_weight(float w, const char* op) {
    if (!(w >= 0.0f && w <= 1.0f)) {
        throw ContractError(std::string(op) + ": weight " + std::to_string(w) + " outside [0, 1]");
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, float fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("Matrix: data length " + std::to_string(data_.size()) + " != " +
                             std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<float>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

MaskThreshold::MaskThreshold(float alpha_m) : alpha_(alpha_m) {
    if (!(alpha_m >= 0.0f && alpha_m < 1.0f)) {
        throw ContractError("alpha_m " + std::to_string(alpha_m) + " outside [0, 1)");
    }
}

Matrix softmax_rows(const Matrix& m) {
    if (m.empty()) throw DimensionError("softmax_rows: empty matrix");
    Matrix out(m.rows(), m.cols());
    std::vector<double> ex(m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto in = m.row(r);
        const float mx = *std::max_element(in.begin(), in.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            ex[c] = std::exp(static_cast<double>(in[c]) - static_cast<double>(mx));
            sum += ex[c];
        }
        auto o = out.row(r);
        for (std::size_t c = 0; c < in.size(); ++c) o[c] = static_cast<float>(ex[c] / sum);
    }
    return out;
}

Matrix l2_normalize_rows(const Matrix& m) {
    Matrix out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = out.row(r);
        double ss = 0.0;
        for (float v : row) ss += static_cast<double>(v) * v;
        if (ss == 0.0) continue;
        const double inv = 1.0 / std::sqrt(ss);
        for (float& v : row) v = static_cast<float>(v * inv);
    }
    return out;
}

Matrix normalize_row_sums(const Matrix& m) {
    Matrix out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = out.row(r);
        double s = 0.0;
        for (float v : row) s += v;
        if (s == 0.0) continue;
        for (float& v : row) v = static_cast<float>(v / s);
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: " + shape_str(a) + " x " + shape_str(b));
    }
    const std::size_t n = a.rows(), k = a.cols(), p = b.cols();
    Matrix out(n, p);
    std::vector<double> acc(p);
    const float* bd = b.data().data();
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const auto arow = a.row(i);
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            if (aik == 0.0) continue;
            const float* brow = bd + kk * p;
            for (std::size_t j = 0; j < p; ++j) acc[j] += aik * brow[j];
        }
        auto orow = out.row(i);
        for (std::size_t j = 0; j < p; ++j) orow[j] = static_cast<float>(acc[j]);
    }
    return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_transposed: " + shape_str(a) + " x " + shape_str(b) + "^T");
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto ar = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const auto br = b.row(j);
            double s = 0.0;
            for (std::size_t c = 0; c < ar.size(); ++c) s += static_cast<double>(ar[c]) * br[c];
            out(i, j) = static_cast<float>(s);
        }
    }
    return out;
}

Matrix mask_below(const Matrix& m, MaskThreshold t) {
    Matrix out = m;
    const float alpha = t.value();
    for (float& v : out.data())
        if (v < alpha) v = 0.0f;
    return out;
}

Matrix lerp(const Matrix& a, const Matrix& b, float w) {
    require_same_shape(a, b, "lerp");
    require_unit_weight(w, "lerp");
    Matrix out(a.rows(), a.cols());
    const auto ad = a.data(), bd = b.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = w * bd[i] + (1.0f - w) * ad[i];
    return out;
}

Matrix lerp(const Matrix& a, const Matrix& b, const Matrix& w) {
    require_same_shape(a, b, "lerp");
    const bool full = w.same_shape(a);
    const bool row_broadcast = w.rows() == 1 && w.cols() == a.cols();
    if (!full && !row_broadcast) {
        throw DimensionError("lerp: weight shape " + shape_str(w) + " incompatible with " + shape_str(a));
    }
    for (float v : w.data()) require_unit_weight(v, "lerp");
    Matrix out(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto ar = a.row(r), br = b.row(r);
        const auto wr = full ? w.row(r) : w.row(0);
        auto o = out.row(r);
        for (std::size_t c = 0; c < o.size(); ++c) o[c] = wr[c] * br[c] + (1.0f - wr[c]) * ar[c];
    }
    return out;
}

Matrix clamp(const Matrix& m, float lo, float hi) {
    Matrix out = m;
    for (float& v : out.data()) v = std::clamp(v, lo, hi);
    return out;
}

Matrix scale(const Matrix& m, float s) {
    Matrix out = m;
    for (float& v : out.data()) v *= s;
    return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "subtract");
    Matrix out = a;
    auto od = out.data();
    const auto bd = b.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
    return out;
}

double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (float v : m.data()) s += static_cast<double>(v) * v;
    return std::sqrt(s);
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "frobenius_distance");
    double s = 0.0;
    const auto ad = a.data(), bd = b.data();
    for (std::size_t i = 0; i < ad.size(); ++i) {
        const double d = static_cast<double>(ad[i]) - bd[i];
        s += d * d;
    }
    return std::sqrt(s);
}

Matrix mean_rows(const Matrix& m, std::span<const std::size_t> rows) {
    if (rows.empty()) throw DimensionError("mean_rows: no rows selected");
    std::vector<double> acc(m.cols(), 0.0);
    for (std::size_t r : rows) {
        if (r >= m.rows()) throw DimensionError("mean_rows: row " + std::to_string(r) + " out of range");
        const auto src = m.row(r);
        for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += src[c];
    }
    Matrix out(1, m.cols());
    for (std::size_t c = 0; c < acc.size(); ++c) out(0, c) = static_cast<float>(acc[c] / rows.size());
    return out;
}

Matrix mean_of_all_rows(const Matrix& m) {
    std::vector<std::size_t> all(m.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return mean_rows(m, all);
}

Matrix resample_bilinear(const Matrix& m, Grid from, Grid to) {
    if (m.cols() != from.pixels()) {
        throw DimensionError("resample_bilinear: row length " + std::to_string(m.cols()) + " is not " +
                             std::to_string(from.height) + "x" + std::to_string(from.width));
    }
    if (to.pixels() == 0) throw DimensionError("resample_bilinear: empty target grid");
    if (from == to) return m;

    struct Tap {
        std::size_t lo, hi;
        float frac;
    };
    auto taps = [](std::size_t src, std::size_t dst) {
        std::vector<Tap> t(dst);
        const double ratio = static_cast<double>(src) / static_cast<double>(dst);
        for (std::size_t i = 0; i < dst; ++i) {
            double x = (static_cast<double>(i) + 0.5) * ratio - 0.5;
            x = std::clamp(x, 0.0, static_cast<double>(src - 1));
            const auto lo = static_cast<std::size_t>(std::floor(x));
            const std::size_t hi = std::min(lo + 1, src - 1);
            t[i] = {lo, hi, static_cast<float>(x - static_cast<double>(lo))};
        }
        return t;
    };
    const auto ty = taps(from.height, to.height);
    const auto tx = taps(from.width, to.width);

    Matrix out(m.rows(), to.pixels());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto src = m.row(r);
        auto dst = out.row(r);
        for (std::size_t y = 0; y < to.height; ++y) {
            const Tap& a = ty[y];
            for (std::size_t x = 0; x < to.width; ++x) {
                const Tap& b = tx[x];
                const float v00 = src[a.lo * from.width + b.lo];
                const float v01 = src[a.lo * from.width + b.hi];
                const float v10 = src[a.hi * from.width + b.lo];
                const float v11 = src[a.hi * from.width + b.hi];
                const float top = v00 + (v01 - v00) * b.frac;
                const float bot = v10 + (v11 - v10) * b.frac;
                dst[y * to.width + x] = top + (bot - top) * a.frac;
            }
        }
    }
    return out;
}

}  // namespace adapedit
