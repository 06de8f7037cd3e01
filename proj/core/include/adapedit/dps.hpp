#pragma once

#include "adapedit/fwt.hpp"
#include "adapedit/matrix.hpp"

namespace adapedit {

/// Per-pixel spatial guidance shared by every edited-prompt word.
struct SpatialScales {
    Matrix s;  // 1 x pixels, entries in [0, 1]
    Grid grid = kAggregateGrid;
    float lambda_sv = 1.0f;
    float lambda_s = 0.9f;
};

// s = clamp(lambda_sv * <E_key, l2(E_V row)>, 0, 1) per pixel.
SpatialScales spatial_scales(const KeyEmbedding& key, const Matrix& visual_features, float lambda_sv, float lambda_s,
                             Grid grid = kAggregateGrid);

// The scale vector resampled to another layer grid.
Matrix scales_at(const SpatialScales& s, Grid layer_grid);

/// C = lambda_s * (S . M* + (1 - S) . Mc) + (1 - lambda_s) * Mc, with the
/// 1 x pixels S broadcast over token rows. Evaluated in exactly this form so
/// lambda_s = 0 returns Mc and lambda_s = 1, S = 1 returns M* bit for bit.
Matrix blend_maps(const Matrix& m_c, const Matrix& m_cstar, const Matrix& s_row, float lambda_s);
Matrix blend_maps(const Matrix& m_c, const Matrix& m_cstar, const SpatialScales& s, Grid layer_grid);

}  // namespace adapedit
