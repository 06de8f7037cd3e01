#pragma once

#include <cstdint>
#include <vector>

#include "adapedit/matrix.hpp"

namespace adapedit {

/// N-d float tensor, row-major. This is the unit of exchange on the wire and
/// in stored attention records.
struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t rank() const noexcept { return dims.size(); }
    std::size_t element_count() const noexcept;
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

Tensor to_tensor(const Matrix& m);
Matrix to_matrix(const Tensor& t);  // requires rank 2

// Stacks equally shaped matrices into a rank-3 tensor and back.
Tensor stack(const std::vector<Matrix>& ms);
std::vector<Matrix> unstack(const Tensor& t);

}  // namespace adapedit
