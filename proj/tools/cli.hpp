#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adapedit/config.hpp"
#include "adapedit/controller.hpp"

namespace adapedit::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kInvalidConfig = 2,
    kBackendUnreachable = 3,
    kMissingRecord = 4,
};

struct GlobalOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::string> backend;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    unsigned jobs = 0;  // 0: hardware concurrency
};

// Setting overrides from command-line flags, keyed like the job file.
using Overrides = std::map<std::string, std::string>;

struct SweepGrid {
    EditConfig base;
    std::vector<float> lambda_tau;
    std::vector<float> lambda_sv;
    std::vector<float> lambda_s;

    std::vector<EditConfig> jobs() const;  // cross product, lambda_s varying fastest
};

// Grid files use the job syntax; the three lambda keys take comma-separated lists.
SweepGrid parse_grid(std::string_view text);

// Subdirectory of one sweep point, e.g. "lt=1_lsv=1_ls=0.5".
std::string sweep_dir_name(const EditConfig& cfg);

// Output root: --out, then the job's out_dir key, then $ADAPEDIT_OUT, then ./out.
std::filesystem::path output_root(const GlobalOptions& g, const KeyValues& job);

// Job file + global flags + overrides, validated.
EditConfig resolve_config(const GlobalOptions& g, const Overrides& overrides);

// Writes x.png, x_star.png, scales.csv, schedule.csv, spatial.png, manifest.txt and record.bin.
void write_run(const std::filesystem::path& dir, const EditConfig& cfg, const EditResult& result);

int cmd_edit(const GlobalOptions& g, const Overrides& overrides, std::ostream& out, std::ostream& err);
int cmd_sweep(const GlobalOptions& g, const std::filesystem::path& grid_file, std::ostream& out, std::ostream& err);
int cmd_inspect_attn(const GlobalOptions& g, const std::optional<std::filesystem::path>& run_dir, int step,
                     const std::vector<std::string>& words, std::ostream& out, std::ostream& err);
int cmd_toy_demo(const GlobalOptions& g, std::ostream& out, std::ostream& err);

// Parses argv and dispatches; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adapedit::cli
