#include <cmath>
#include <string>

#include "adapedit/backend.hpp"
#include "adapedit/errors.hpp"

namespace adapedit {

const char* branch_name(Branch b) noexcept { return b == Branch::Source ? "source" : "edit"; }

NoiseSchedule NoiseSchedule::linear(int steps) {
    if (steps < 1) throw ConfigError("schedule needs at least one step");
    std::vector<double> ab(static_cast<std::size_t>(steps) + 1);
    for (int t = 0; t <= steps; ++t) ab[t] = 1.0 - static_cast<double>(t) / (steps + 1);
    return NoiseSchedule(std::move(ab));
}

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bar) : alpha_bar_(std::move(alpha_bar)) {
    if (alpha_bar_.size() < 2) throw ConfigError("schedule needs at least one step");
    if (alpha_bar_[0] != 1.0) throw ConfigError("alpha_bar(0) must be 1");
    for (std::size_t t = 1; t < alpha_bar_.size(); ++t) {
        if (!(alpha_bar_[t] > 0.0 && alpha_bar_[t] <= alpha_bar_[t - 1])) {
            throw ConfigError("alpha_bar must be positive and non-increasing");
        }
    }
}

bool NoiseSchedule::strictly_decreasing() const noexcept {
    for (std::size_t t = 1; t < alpha_bar_.size(); ++t)
        if (!(alpha_bar_[t] < alpha_bar_[t - 1])) return false;
    return true;
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t > steps()) {
        throw ContractError("step " + std::to_string(t) + " outside schedule 0.." + std::to_string(steps()));
    }
    return alpha_bar_[static_cast<std::size_t>(t)];
}

Matrix forward_noise(const Matrix& z0, int t, const Matrix& eps, const NoiseSchedule& schedule) {
    if (!z0.same_shape(eps)) throw DimensionError("forward_noise: latent and noise shapes differ");
    const double a = schedule.alpha_bar(t);
    const double sa = std::sqrt(a), sn = std::sqrt(1.0 - a);
    Matrix out(z0.rows(), z0.cols());
    const auto zd = z0.data(), ed = eps.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = static_cast<float>(sa * zd[i] + sn * ed[i]);
    return out;
}

Matrix cfg_combine(const Matrix& eps_c, const Matrix& eps_null, float w) {
    if (!eps_c.same_shape(eps_null)) throw DimensionError("cfg_combine: prediction shapes differ");
    Matrix out(eps_c.rows(), eps_c.cols());
    const auto cd = eps_c.data(), nd = eps_null.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = w * cd[i] + (1.0f - w) * nd[i];
    return out;
}

Matrix reverse_step(const Matrix& z_t, const Matrix& noise_pred, int t, const NoiseSchedule& schedule) {
    if (t < 1) throw ContractError("reverse_step: t must be >= 1");
    if (!z_t.same_shape(noise_pred)) throw DimensionError("reverse_step: latent and noise shapes differ");
    const double a = schedule.alpha_bar(t);
    const double a_prev = schedule.alpha_bar(t - 1);
    const double sa = std::sqrt(a), sn = std::sqrt(1.0 - a);
    const double sa_prev = std::sqrt(a_prev), sn_prev = std::sqrt(1.0 - a_prev);
    Matrix out(z_t.rows(), z_t.cols());
    const auto zd = z_t.data(), ed = noise_pred.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) {
        const double z0 = (zd[i] - sn * ed[i]) / sa;
        od[i] = static_cast<float>(sa_prev * z0 + sn_prev * ed[i]);
    }
    return out;
}

}  // namespace adapedit
