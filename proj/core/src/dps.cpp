#include "adapedit/dps.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adapedit/errors.hpp"

namespace adapedit {

SpatialScales spatial_scales(const KeyEmbedding& key, const Matrix& visual_features, float lambda_sv, float lambda_s,
                             Grid grid) {
    if (!(lambda_sv >= 0.0f) || !std::isfinite(lambda_sv)) {
        throw ConfigError("lambda_sv must be a finite non-negative number");
    }
    if (!(lambda_s >= 0.0f && lambda_s <= 1.0f)) throw ConfigError("lambda_s must lie in [0, 1]");
    if (visual_features.rows() != grid.pixels()) throw DimensionError("spatial_scales: feature rows do not match grid");
    if (key.vec.cols() != visual_features.cols()) throw DimensionError("spatial_scales: key width differs from features");
    const Matrix sims = matmul_transposed(key.vec, l2_normalize_rows(visual_features));
    return {clamp(scale(sims, lambda_sv), 0.0f, 1.0f), grid, lambda_sv, lambda_s};
}

Matrix scales_at(const SpatialScales& s, Grid layer_grid) {
    return s.grid == layer_grid ? s.s : resample_bilinear(s.s, s.grid, layer_grid);
}

Matrix blend_maps(const Matrix& m_c, const Matrix& m_cstar, const Matrix& s_row, float lambda_s) {
    if (!m_c.same_shape(m_cstar)) throw DimensionError("blend_maps: original and edited maps differ in shape");
    if (s_row.rows() != 1 || s_row.cols() != m_c.cols()) {
        throw DimensionError("blend_maps: spatial scales have " + std::to_string(s_row.cols()) + " entries for " +
                             std::to_string(m_c.cols()) + " pixels");
    }
    if (!(lambda_s >= 0.0f && lambda_s <= 1.0f)) throw ContractError("blend_maps: lambda_s outside [0, 1]");
    const auto s = s_row.row(0);
    Matrix out(m_c.rows(), m_c.cols());
    for (std::size_t r = 0; r < m_c.rows(); ++r) {
        const auto mc = m_c.row(r), ms = m_cstar.row(r);
        auto o = out.row(r);
        for (std::size_t p = 0; p < o.size(); ++p) {
            o[p] = lambda_s * (s[p] * ms[p] + (1.0f - s[p]) * mc[p]) + (1.0f - lambda_s) * mc[p];
        }
    }
    return out;
}

Matrix blend_maps(const Matrix& m_c, const Matrix& m_cstar, const SpatialScales& s, Grid layer_grid) {
    if (m_c.cols() != layer_grid.pixels()) throw DimensionError("blend_maps: map width does not match the layer grid");
    return blend_maps(m_c, m_cstar, scales_at(s, layer_grid), s.lambda_s);
}

}  // namespace adapedit
