#include "adapedit/tensor.hpp"

#include <string>

#include "adapedit/errors.hpp"

namespace adapedit {

std::size_t Tensor::element_count() const noexcept {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

Tensor to_tensor(const Matrix& m) {
    return {{static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, m.values()};
}

Matrix to_matrix(const Tensor& t) {
    if (t.rank() != 2) throw DimensionError("expected a rank-2 tensor, got rank " + std::to_string(t.rank()));
    return Matrix(t.dims[0], t.dims[1], t.data);
}

Tensor stack(const std::vector<Matrix>& ms) {
    if (ms.empty()) throw DimensionError("stack: no matrices");
    Tensor t;
    t.dims = {static_cast<std::uint32_t>(ms.size()), static_cast<std::uint32_t>(ms[0].rows()),
              static_cast<std::uint32_t>(ms[0].cols())};
    t.data.reserve(t.element_count());
    for (const auto& m : ms) {
        if (!m.same_shape(ms[0])) throw DimensionError("stack: heads differ in shape");
        t.data.insert(t.data.end(), m.data().begin(), m.data().end());
    }
    return t;
}

std::vector<Matrix> unstack(const Tensor& t) {
    if (t.rank() == 2) return {to_matrix(t)};
    if (t.rank() != 3) throw DimensionError("unstack: expected rank 2 or 3, got rank " + std::to_string(t.rank()));
    const std::size_t per = static_cast<std::size_t>(t.dims[1]) * t.dims[2];
    std::vector<Matrix> out;
    out.reserve(t.dims[0]);
    for (std::uint32_t h = 0; h < t.dims[0]; ++h) {
        out.emplace_back(t.dims[1], t.dims[2],
                         std::vector<float>(t.data.begin() + h * per, t.data.begin() + (h + 1) * per));
    }
    return out;
}

}  // namespace adapedit
