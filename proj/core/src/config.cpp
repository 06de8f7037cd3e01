#include "adapedit/config.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "adapedit/errors.hpp"
#include "adapedit/transport.hpp"

namespace adapedit {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
    Int v{};
    const char* last = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), last, v);
    if (ec != std::errc() || ptr != last) throw ConfigError(key + ": '" + value + "' is not a valid integer");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key + ": '" + value + "' is not true or false");
}

}  // namespace

std::string format_float(float v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

float parse_float(const std::string& key, const std::string& value) {
    float v = 0.0f;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw ConfigError(key + ": '" + value + "' is not a finite number");
    }
    return v;
}

bool EditConfig::remote() const noexcept { return backend.rfind("remote:", 0) == 0; }

std::string EditConfig::remote_endpoint() const { return remote() ? backend.substr(7) : std::string(); }

void EditConfig::validate() const {
    if (trim(prompt).empty()) throw ConfigError("prompt: missing or empty");
    if (trim(edit).empty()) throw ConfigError("edit: missing or empty");
    for (const auto& [key, text] : {std::pair<const char*, const std::string&>{"prompt", prompt}, {"edit", edit}}) {
        if (text.find_first_of("#\r\n") != std::string::npos) {
            throw ConfigError(std::string(key) + ": must not contain '#' or line breaks");
        }
    }
    if (!(lambda_tau >= 0.0f)) throw ConfigError("lambda_tau: must be >= 0");
    if (!(lambda_sv >= 0.0f)) throw ConfigError("lambda_sv: must be >= 0");
    if (!(lambda_s >= 0.0f && lambda_s <= 1.0f)) throw ConfigError("lambda_s: must lie in [0, 1]");
    if (!(alpha_m >= 0.0f && alpha_m < 1.0f)) throw ConfigError("alpha_m: must lie in [0, 1)");
    if (steps < 1 || steps > 65535) throw ConfigError("steps: must lie in [1, 65535]");
    if (!std::isfinite(guidance)) throw ConfigError("guidance: must be finite");
    if (backend != "toy") {
        if (!remote()) throw ConfigError("backend: expected 'toy' or 'remote:<host:port>', got '" + backend + "'");
        parse_endpoint(remote_endpoint());
    }
    if (out_dir.empty()) throw ConfigError("out_dir: must not be empty");
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues out;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key = trim(std::string_view(body).substr(0, eq));
        std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + key);
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

void apply_setting(EditConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "prompt") cfg.prompt = value;
    else if (key == "edit") cfg.edit = value;
    else if (key == "lambda_tau") cfg.lambda_tau = parse_float(key, value);
    else if (key == "lambda_sv") cfg.lambda_sv = parse_float(key, value);
    else if (key == "lambda_s") cfg.lambda_s = parse_float(key, value);
    else if (key == "alpha_m") cfg.alpha_m = parse_float(key, value);
    else if (key == "steps") cfg.steps = parse_int<int>(key, value);
    else if (key == "guidance") cfg.guidance = parse_float(key, value);
    else if (key == "seed") cfg.seed = parse_int<std::uint64_t>(key, value);
    else if (key == "backend") cfg.backend = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "dps.per_step") cfg.dps_per_step = parse_bool(key, value);
    else throw ConfigError("unknown key '" + key + "'");
}

EditConfig parse_job(std::string_view text) {
    EditConfig cfg;
    for (const auto& [k, v] : parse_key_values(text)) apply_setting(cfg, k, v);
    cfg.validate();
    return cfg;
}

std::string format_manifest(const EditConfig& cfg) {
    std::ostringstream os;
    os << "prompt = " << cfg.prompt << '\n'
       << "edit = " << cfg.edit << '\n'
       << "lambda_tau = " << format_float(cfg.lambda_tau) << '\n'
       << "lambda_sv = " << format_float(cfg.lambda_sv) << '\n'
       << "lambda_s = " << format_float(cfg.lambda_s) << '\n'
       << "alpha_m = " << format_float(cfg.alpha_m) << '\n'
       << "steps = " << cfg.steps << '\n'
       << "guidance = " << format_float(cfg.guidance) << '\n'
       << "seed = " << cfg.seed << '\n'
       << "backend = " << cfg.backend << '\n'
       << "out_dir = " << cfg.out_dir << '\n'
       << "dps.per_step = " << (cfg.dps_per_step ? "true" : "false") << '\n';
    return os.str();
}

}  // namespace adapedit
