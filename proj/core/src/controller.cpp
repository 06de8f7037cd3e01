#include "adapedit/controller.hpp"

#include <algorithm>
#include <cmath>

#include "adapedit/errors.hpp"
#include "adapedit/remote_backend.hpp"
#include "adapedit/toy_backend.hpp"

namespace adapedit {

GateSchedule::GateSchedule(std::vector<int> thresholds, int steps) : thresholds_(std::move(thresholds)), steps_(steps) {
    if (steps < 1) throw ContractError("gate schedule needs at least one step");
}

Gate GateSchedule::at(std::size_t word, int t) const {
    return t > thresholds_.at(word) ? Gate::Blend : Gate::Preserve;
}

int GateSchedule::preserve_steps(std::size_t word) const { return std::min(thresholds_.at(word), steps_); }

int GateSchedule::total_preserve_steps() const {
    int total = 0;
    for (std::size_t i = 0; i < thresholds_.size(); ++i) total += preserve_steps(i);
    return total;
}

GateSchedule build_schedule(const TemporalScales& scales, int steps) {
    std::vector<int> k;
    k.reserve(scales.tau.size());
    for (float tau : scales.tau) k.push_back(static_cast<int>(std::lround(static_cast<double>(tau) * steps)));
    return GateSchedule(std::move(k), steps);
}

namespace {

SessionParams session_params(const EditConfig& cfg) {
    SessionParams p;
    p.steps = static_cast<std::uint16_t>(cfg.steps);
    p.guidance = cfg.guidance;
    p.seed = cfg.seed;
    p.prompt = cfg.prompt;
    p.edit = cfg.edit;
    return p;
}

void check_maps(const std::vector<LayerMaps>& maps, const TokenizedPrompt& prompt, const char* branch, int t) {
    for (const auto& lm : maps) {
        for (const auto& h : lm.heads) {
            if (h.rows() < prompt.length()) {
                throw BackendError(t, std::string(branch) + " maps have " + std::to_string(h.rows()) +
                                          " token rows for a prompt of " + std::to_string(prompt.length()));
            }
        }
    }
}

const LayerMaps& layer_maps(const std::vector<LayerMaps>& maps, std::uint16_t id) {
    for (const auto& lm : maps)
        if (lm.layer == id) return lm;
    throw StateError("attention record lacks layer " + std::to_string(id));
}

}  // namespace

CollectResult collect_pass(const EditConfig& cfg, DiffusionBackend& backend) {
    cfg.validate();
    const Vocabulary vocab = backend.vocabulary();
    TokenizedPrompt c = tokenize(cfg.prompt, vocab);
    TokenizedPrompt c_star = tokenize(cfg.edit, vocab);
    const SessionInfo info = backend.init(session_params(cfg));
    if (info.source_word_tokens) c = with_token_counts(c, *info.source_word_tokens);
    if (info.edit_word_tokens) c_star = with_token_counts(c_star, *info.edit_word_tokens);

    AttnRecord record(cfg.steps, info.layers, c, c_star);
    for (int t = cfg.steps; t >= 1; --t) {
        StepOutput src = backend.step(t, Branch::Source, {});
        StepOutput ed = backend.step(t, Branch::Edit, {});
        check_maps(src.maps, c, "source", t);
        check_maps(ed.maps, c_star, "edit", t);
        StepRecord s;
        s.t = t;
        s.source_maps = std::move(src.maps);
        s.edit_maps = std::move(ed.maps);
        s.source_features = std::move(src.features);
        s.edit_features = std::move(ed.features);
        record.append(std::move(s));
    }
    CollectResult r;
    r.x = backend.decode(Branch::Source);
    r.x_star_unguided = backend.decode(Branch::Edit);
    r.record = std::move(record);
    return r;
}

Matrix project_source_map(const Matrix& source, const Matrix& fallback,
                          const std::vector<std::optional<std::size_t>>& correspondence) {
    if (source.cols() != fallback.cols()) throw DimensionError("project_source_map: pixel counts differ");
    Matrix out(fallback.rows(), fallback.cols());
    const std::size_t prompt_len = correspondence.size();
    for (std::size_t p = 0; p < out.rows(); ++p) {
        std::optional<std::size_t> src;
        if (p < prompt_len) {
            src = correspondence[p];
        } else if (prompt_len > 0 && correspondence.back()) {
            // Padding rows keep their offset from the end token.
            src = *correspondence.back() + (p - prompt_len + 1);
        }
        const auto from = src && *src < source.rows() ? source.row(*src) : fallback.row(p);
        std::copy(from.begin(), from.end(), out.row(p).begin());
    }
    return out;
}

EditResult run_edit(const EditConfig& cfg, DiffusionBackend& backend, const InjectionObserver& observer) {
    return run_edit(cfg, backend, collect_pass(cfg, backend), observer);
}

EditResult run_edit(const EditConfig& cfg, DiffusionBackend& backend, const CollectResult& pass1,
                    const InjectionObserver& observer) {
    cfg.validate();
    EditResult r;
    const AttnRecord& rec = pass1.record;
    const TokenizedPrompt& c = rec.source_prompt();
    const TokenizedPrompt& c_star = rec.edit_prompt();
    r.alignment = align(c, c_star);

    if (r.alignment.no_op()) {
        r.no_op = true;
        r.warnings.push_back("the edited prompt has no new words; returning the original image");
        r.schedule = GateSchedule(std::vector<int>(c_star.word_count(), 0), cfg.steps);
        r.x = pass1.x;
        r.x_star = pass1.x;
        r.record = pass1.record;
        return r;
    }

    r.fwt = run_fwt(rec, r.alignment, MaskThreshold(cfg.alpha_m), cfg.lambda_tau);
    r.spatial = spatial_scales(r.fwt->key, r.fwt->visual_features, cfg.lambda_sv, cfg.lambda_s);
    r.schedule = build_schedule(r.fwt->scales, cfg.steps);

    const auto corr = token_correspondence(r.alignment, c, c_star);
    std::vector<std::optional<std::size_t>> row_word(c_star.length());
    for (std::size_t p = 0; p < c_star.length(); ++p) row_word[p] = c_star.word_at(p);

    const SessionInfo info = backend.init(session_params(cfg));
    if (info.layers != rec.layers()) throw StateError("backend layer catalog changed between passes");

    for (int t = cfg.steps; t >= 1; --t) {
        const StepRecord& s = rec.at(t);
        backend.step(t, Branch::Source, {});

        SpatialScales spatial = *r.spatial;
        if (cfg.dps_per_step && !s.edit_features.empty()) {
            spatial = spatial_scales(r.fwt->key, visual_features(s.edit_features, rec.layers()), cfg.lambda_sv,
                                     cfg.lambda_s);
        }

        std::vector<LayerMaps> injected;
        injected.reserve(rec.layers().size());
        for (const LayerInfo& layer : rec.layers()) {
            const LayerMaps& mc = layer_maps(s.source_maps, layer.id);
            const LayerMaps& ms = layer_maps(s.edit_maps, layer.id);
            if (mc.heads.size() != ms.heads.size()) throw StateError("branches disagree on the head count");
            const Matrix s_layer = scales_at(spatial, layer.grid);
            LayerMaps out{layer.id, {}};
            LayerMaps projected{layer.id, {}};
            for (std::size_t h = 0; h < ms.heads.size(); ++h) {
                Matrix base = project_source_map(mc.heads[h], ms.heads[h], corr);
                const Matrix blended = blend_maps(base, ms.heads[h], s_layer, cfg.lambda_s);
                Matrix inj = base;
                for (std::size_t p = 0; p < c_star.length(); ++p) {
                    const auto w = row_word[p];
                    if (!w || r.schedule.at(*w, t) != Gate::Blend) continue;
                    const auto from = blended.row(p);
                    std::copy(from.begin(), from.end(), inj.row(p).begin());
                }
                r.map_divergence += frobenius_distance(inj, base);
                out.heads.push_back(std::move(inj));
                projected.heads.push_back(std::move(base));
            }
            if (observer) observer(t, out, projected);
            injected.push_back(std::move(out));
        }
        backend.step(t, Branch::Edit, injected);
    }
    r.x = backend.decode(Branch::Source);
    r.x_star = backend.decode(Branch::Edit);
    if (r.x != pass1.x) r.warnings.push_back("the original-prompt branch did not reproduce across passes");
    r.record = pass1.record;
    return r;
}

std::unique_ptr<DiffusionBackend> make_backend(const EditConfig& cfg) {
    if (cfg.backend == "toy") return std::make_unique<ToyBackend>();
    if (cfg.remote()) return std::make_unique<RemoteBackend>(cfg.remote_endpoint());
    throw ConfigError("backend: unknown backend '" + cfg.backend + "'");
}

}  // namespace adapedit
