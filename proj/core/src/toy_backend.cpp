#include "adapedit/toy_backend.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "adapedit/errors.hpp"

namespace adapedit {

namespace {

constexpr std::size_t kPatch = 3;
constexpr double kLatentCarry = 0.5;
constexpr double kOutScale = 0.08;
constexpr Grid kPosGrid{4, 4};
constexpr double kPosScale = 1.5;
constexpr float kDecodeScale = 0.25f;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(splitmix64(seed ^ splitmix64(a)) ^ b);
}

// 2x2 average pooling of a (h*w) x c latent.
Matrix avg_pool2(const Matrix& m, Grid g) {
    const Grid half{g.height / 2, g.width / 2};
    Matrix out(half.pixels(), m.cols());
    for (std::size_t y = 0; y < half.height; ++y)
        for (std::size_t x = 0; x < half.width; ++x)
            for (std::size_t c = 0; c < m.cols(); ++c) {
                const std::size_t y0 = 2 * y, x0 = 2 * x;
                const float s = m(y0 * g.width + x0, c) + m(y0 * g.width + x0 + 1, c) +
                                m((y0 + 1) * g.width + x0, c) + m((y0 + 1) * g.width + x0 + 1, c);
                out(y * half.width + x, c) = 0.25f * s;
            }
    return out;
}

// Each pixel's clamped 3x3 neighbourhood, channels innermost.
Matrix patches(const Matrix& m, Grid g) {
    const std::size_t c = m.cols();
    Matrix out(g.pixels(), kPatch * kPatch * c);
    for (std::size_t y = 0; y < g.height; ++y)
        for (std::size_t x = 0; x < g.width; ++x) {
            auto dst = out.row(y * g.width + x);
            std::size_t k = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const auto yy = static_cast<std::size_t>(std::clamp<long>(static_cast<long>(y) + dy, 0, g.height - 1));
                    const auto xx = static_cast<std::size_t>(std::clamp<long>(static_cast<long>(x) + dx, 0, g.width - 1));
                    const auto src = m.row(yy * g.width + xx);
                    for (std::size_t ch = 0; ch < c; ++ch) dst[k++] = src[ch];
                }
        }
    return out;
}

void add_inplace(Matrix& a, const Matrix& b) {
    auto ad = a.data();
    const auto bd = b.data();
    for (std::size_t i = 0; i < ad.size(); ++i) ad[i] += bd[i];
}

}  // namespace

Matrix gaussian_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols, double stddev) {
    std::mt19937_64 gen(seed);
    auto uniform = [&gen] { return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53; };
    Matrix m(rows, cols);
    auto d = m.data();
    for (std::size_t i = 0; i < d.size(); i += 2) {
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        d[i] = static_cast<float>(stddev * r * std::cos(theta));
        if (i + 1 < d.size()) d[i + 1] = static_cast<float>(stddev * r * std::sin(theta));
    }
    return m;
}

ToyModel::ToyModel(std::uint64_t model_seed) : seed_(model_seed) {
    layers_ = {LayerInfo{0, {32, 32}, 1}, LayerInfo{1, {16, 16}, 1}};
    const std::size_t patch_in = kPatch * kPatch * kLatentChannels;
    const double inv_w = 1.0 / std::sqrt(static_cast<double>(kWidth));
    for (const auto& l : layers_) {
        LayerWeights w;
        w.patch = gaussian_matrix(derive(seed_, l.id, 1), patch_in, kWidth, 1.0 / std::sqrt(static_cast<double>(patch_in)));
        // Low-frequency positional field: a coarse random grid, bilinearly upsampled.
        const Matrix coarse = gaussian_matrix(derive(seed_, l.id, 2), kWidth, kPosGrid.pixels(), kPosScale);
        w.pos = resample_bilinear(coarse, kPosGrid, l.grid).transposed();
        w.query = gaussian_matrix(derive(seed_, l.id, 3), kWidth, kWidth, inv_w);
        w.key = gaussian_matrix(derive(seed_, l.id, 4), kWidth, kWidth, inv_w);
        w.value = gaussian_matrix(derive(seed_, l.id, 5), kWidth, kLatentChannels, inv_w);
        w.out = gaussian_matrix(derive(seed_, l.id, 6), kLatentChannels, kLatentChannels, kOutScale);
        weights_.push_back(std::move(w));
    }
}

Matrix ToyModel::context(const std::vector<std::int32_t>& token_ids) const {
    if (token_ids.empty()) return Matrix(1, kWidth, 0.0f);
    Matrix ctx(token_ids.size(), kWidth);
    for (std::size_t i = 0; i < token_ids.size(); ++i) {
        const Matrix e = gaussian_matrix(derive(seed_, 0x70CE, static_cast<std::uint64_t>(token_ids[i])), 1, kWidth);
        std::copy(e.data().begin(), e.data().end(), ctx.row(i).begin());
    }
    return ctx;
}

Matrix ToyModel::features(std::size_t l, const Matrix& latent) const {
    if (latent.rows() != kLatentGrid.pixels() || latent.cols() != kLatentChannels) {
        throw DimensionError("toy model: latent must be 1024 x 4");
    }
    const LayerInfo& info = layers_.at(l);
    const Matrix z = info.grid == kLatentGrid ? latent : avg_pool2(latent, kLatentGrid);
    Matrix f = matmul(patches(z, info.grid), weights_[l].patch);
    add_inplace(f, weights_[l].pos);
    return f;
}

Matrix ToyModel::attention(std::size_t l, const Matrix& features, const Matrix& context) const {
    const Matrix q = matmul(features, weights_.at(l).query);
    const Matrix k = matmul(context, weights_[l].key);
    const Matrix logits = scale(matmul_transposed(q, k), static_cast<float>(1.0 / std::sqrt(double(kWidth))));
    return softmax_rows(logits).transposed();
}

Matrix ToyModel::values(std::size_t l, const Matrix& context) const { return matmul(context, weights_.at(l).value); }

Matrix ToyModel::value_mix(const Matrix& attention, const Matrix& values) {
    if (attention.rows() != values.rows()) {
        throw DimensionError("value_mix: attention has " + std::to_string(attention.rows()) + " tokens, values " +
                             std::to_string(values.rows()));
    }
    return matmul(attention.transposed(), values);
}

Matrix ToyModel::predict_x0(const std::vector<Matrix>& mixes, const Matrix& latent, double alpha_bar) const {
    if (mixes.size() != layers_.size()) throw DimensionError("predict_x0: one value mix per layer required");
    Matrix x0(kLatentGrid.pixels(), kLatentChannels);
    for (std::size_t l = 0; l < mixes.size(); ++l) {
        Matrix contrib = matmul(mixes[l], weights_[l].out);
        if (layers_[l].grid != kLatentGrid) {
            contrib = resample_bilinear(contrib.transposed(), layers_[l].grid, kLatentGrid).transposed();
        }
        add_inplace(x0, contrib);
    }
    const auto carry = static_cast<float>(kLatentCarry * std::sqrt(alpha_bar));
    auto xd = x0.data();
    const auto zd = latent.data();
    for (std::size_t i = 0; i < xd.size(); ++i) xd[i] += carry * zd[i];
    return x0;
}

Image ToyModel::decode_rgb(const Matrix& latent) {
    static constexpr float kToRgb[4][3] = {
        {0.298f, 0.207f, 0.208f}, {0.187f, 0.286f, 0.173f}, {-0.158f, 0.189f, 0.264f}, {-0.184f, -0.271f, -0.473f}};
    if (latent.cols() != kLatentChannels || latent.rows() != kLatentGrid.pixels()) {
        throw DimensionError("decode_rgb: latent must be 1024 x 4");
    }
    Image img{32, 32, 3, std::vector<std::uint8_t>(kLatentGrid.pixels() * 3)};
    for (std::size_t p = 0; p < latent.rows(); ++p) {
        for (std::size_t ch = 0; ch < 3; ++ch) {
            float v = 0.5f;
            for (std::size_t k = 0; k < kLatentChannels; ++k) v += kDecodeScale * latent(p, k) * kToRgb[k][ch];
            img.pixels[p * 3 + ch] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
        }
    }
    return img;
}

Vocabulary ToyBackend::vocabulary() const { return chunked_hash_vocabulary; }

SessionInfo ToyBackend::init(const SessionParams& params) {
    if (params.steps < 1) throw ConfigError("toy backend: steps must be >= 1");
    schedule_ = NoiseSchedule::linear(params.steps);
    guidance_ = params.guidance;
    const Vocabulary vocab = vocabulary();
    const Matrix z_T = gaussian_matrix(derive(params.seed, 0x1A7E), ToyModel::kLatentGrid.pixels(),
                                       ToyModel::kLatentChannels);
    branches_[0] = {model_.context(tokenize(params.prompt, vocab).token_ids), z_T, params.steps};
    branches_[1] = {model_.context(tokenize(params.edit, vocab).token_ids), z_T, params.steps};
    null_context_ = model_.context({});
    return {model_.layers(), std::nullopt, std::nullopt};
}

StepOutput ToyBackend::step(int t, Branch branch, std::span<const LayerMaps> injected) {
    if (!schedule_) throw StateError("toy backend: step before init");
    BranchState& st = branches_[static_cast<std::size_t>(branch)];
    if (t != st.next_t || t < 1) {
        throw StateError("toy backend: " + std::string(branch_name(branch)) + " branch expected step " +
                         std::to_string(st.next_t) + ", got " + std::to_string(t));
    }
    const auto& layers = model_.layers();
    for (const auto& inj : injected) {
        if (inj.layer >= layers.size()) throw DimensionError("injected map for unknown layer " + std::to_string(inj.layer));
        if (inj.heads.size() != layers[inj.layer].heads) throw DimensionError("injected map head count mismatch");
    }

    StepOutput out;
    std::vector<Matrix> mixes, null_mixes;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Matrix feats = model_.features(l, st.latent);
        Matrix attn = model_.attention(l, feats, st.context);
        out.maps.push_back({layers[l].id, {attn}});
        for (const auto& inj : injected) {
            if (inj.layer != layers[l].id) continue;
            if (!inj.heads[0].same_shape(attn)) {
                throw DimensionError("injected map for layer " + std::to_string(l) + " is " +
                                     std::to_string(inj.heads[0].rows()) + "x" + std::to_string(inj.heads[0].cols()) +
                                     ", expected " + std::to_string(attn.rows()) + "x" + std::to_string(attn.cols()));
            }
            attn = inj.heads[0];
        }
        mixes.push_back(ToyModel::value_mix(attn, model_.values(l, st.context)));
        const Matrix null_attn = model_.attention(l, feats, null_context_);
        null_mixes.push_back(ToyModel::value_mix(null_attn, model_.values(l, null_context_)));
        if (layers[l].grid == ToyModel::kLatentGrid) out.features.push_back({layers[l].id, feats});
    }

    const double a = schedule_->alpha_bar(t);
    const double sa = std::sqrt(a), sn = std::sqrt(1.0 - a);
    auto eps_from_x0 = [&](const Matrix& x0) {
        Matrix eps(x0.rows(), x0.cols());
        const std::span<const float> zd = st.latent.data();
        const std::span<const float> xd = x0.data();
        auto ed = eps.data();
        for (std::size_t i = 0; i < ed.size(); ++i) ed[i] = static_cast<float>((zd[i] - sa * xd[i]) / sn);
        return eps;
    };
    const Matrix eps_c = eps_from_x0(model_.predict_x0(mixes, st.latent, a));
    const Matrix eps_null = eps_from_x0(model_.predict_x0(null_mixes, st.latent, a));
    const Matrix eps = cfg_combine(eps_c, eps_null, guidance_);
    st.latent = reverse_step(st.latent, eps, t, *schedule_);
    st.next_t = t - 1;
    out.noise_pred = to_tensor(eps);
    return out;
}

Image ToyBackend::decode(Branch branch) {
    const BranchState& st = branches_[static_cast<std::size_t>(branch)];
    if (!schedule_ || st.next_t != 0) {
        throw StateError(std::string("toy backend: decode before the ") + branch_name(branch) + " branch finished");
    }
    return ToyModel::decode_rgb(st.latent);
}

void ToyBackend::close() { schedule_.reset(); }

const Matrix& ToyBackend::latent(Branch branch) const { return branches_[static_cast<std::size_t>(branch)].latent; }

}  // namespace adapedit
