#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace adapedit {

/// Dense row-major float matrix. Attention maps (tokens x pixels), visual
/// features (pixels x d) and embeddings all use this type.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f);
    Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);
    Matrix(std::initializer_list<std::initializer_list<float>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    const std::vector<float>& values() const noexcept { return data_; }

    Matrix transposed() const;

    bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

/// Entry threshold for attention masking; entries strictly below it are zeroed.
class MaskThreshold {
public:
    static constexpr float kDefault = 0.03f;

    constexpr MaskThreshold() = default;
    explicit MaskThreshold(float alpha_m);

    constexpr float value() const noexcept { return alpha_; }

private:
    float alpha_ = kDefault;
};

/// Square image grid, used to reinterpret a row of length height*width.
struct Grid {
    std::size_t height = 0;
    std::size_t width = 0;
    constexpr std::size_t pixels() const noexcept { return height * width; }
    friend constexpr bool operator==(Grid, Grid) = default;
};

// Row softmax with max subtraction and double accumulation. Throws
// DimensionError on an empty matrix.
Matrix softmax_rows(const Matrix& m);

// Unit-norm rows. All-zero rows are passed through unchanged.
Matrix l2_normalize_rows(const Matrix& m);

// Rows rescaled to sum to 1; all-zero rows are passed through unchanged.
Matrix normalize_row_sums(const Matrix& m);

Matrix matmul(const Matrix& a, const Matrix& b);

// a x b^T without materializing the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

Matrix mask_below(const Matrix& m, MaskThreshold t);

// w*b + (1-w)*a entrywise. w must lie in [0, 1].
Matrix lerp(const Matrix& a, const Matrix& b, float w);
Matrix lerp(const Matrix& a, const Matrix& b, const Matrix& w);

Matrix clamp(const Matrix& m, float lo, float hi);
Matrix scale(const Matrix& m, float s);
Matrix subtract(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& m);
double frobenius_distance(const Matrix& a, const Matrix& b);

// Mean of the given rows (double accumulation) as a 1 x cols matrix.
Matrix mean_rows(const Matrix& m, std::span<const std::size_t> rows);
Matrix mean_of_all_rows(const Matrix& m);

/// Bilinear resampling of every row, each row read as a `from` grid and
/// written as a `to` grid. Half-pixel centers, edge clamped; the weights for
/// every output pixel sum to one.
Matrix resample_bilinear(const Matrix& m, Grid from, Grid to);

}  // namespace adapedit
