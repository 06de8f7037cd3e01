#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adapedit {

/// All knobs of one edit job. Defaults for steps, guidance and alpha_m are
/// the standard values (50 steps, w = 7.5, alpha_m = 0.03).
struct EditConfig {
    std::string prompt;
    std::string edit;
    float lambda_tau = 1.0f;
    float lambda_sv = 1.0f;
    float lambda_s = 0.9f;
    float alpha_m = 0.03f;
    int steps = 50;
    float guidance = 7.5f;
    std::uint64_t seed = 42;
    std::string backend = "toy";  // "toy" or "remote:<host:port>"
    std::string out_dir = "./out";
    bool dps_per_step = false;

    // Throws ConfigError naming the first offending key.
    void validate() const;
    bool remote() const noexcept;
    std::string remote_endpoint() const;  // the part after "remote:"
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Plain-text `key = value` lines; `#` starts a comment, blank lines are
// skipped, surrounding whitespace is trimmed. Duplicate keys are an error.
KeyValues parse_key_values(std::string_view text);

// Applies one setting; throws ConfigError for unknown keys or bad values.
void apply_setting(EditConfig& cfg, const std::string& key, const std::string& value);

// Parses a job file. `prompt` and `edit` are required; everything else
// falls back to the defaults above. The result is validated.
EditConfig parse_job(std::string_view text);

// Every key with its resolved value, in job-file syntax. Floats use the
// shortest representation that round-trips, so re-parsing a manifest gives
// back an identical config.
std::string format_manifest(const EditConfig& cfg);

std::string format_float(float v);
float parse_float(const std::string& key, const std::string& value);

}  // namespace adapedit
