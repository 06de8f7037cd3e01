#include "cli.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "adapedit/errors.hpp"
#include "adapedit/image.hpp"

namespace adapedit::cli {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    const std::string_view sv(text);
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(sv.data()), sv.size()));
}

KeyValues load_job(const GlobalOptions& g) { return g.config ? parse_key_values(read_text(*g.config)) : KeyValues{}; }

std::vector<float> parse_list(const std::string& key, const std::string& value) {
    std::vector<float> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ConfigError(key + ": empty list entry");
        out.push_back(parse_float(key, item.substr(b, e - b + 1)));
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const LengthError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const BackendUnavailable& e) {
        err << "error: backend unreachable: " << e.what() << '\n';
        return kBackendUnreachable;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

std::string scales_csv(const EditResult& r) {
    std::ostringstream os;
    os << "word,A,tau\n";
    if (!r.fwt) return os.str();
    const auto& words = r.record.edit_prompt().words;
    for (std::size_t i = 0; i < words.size(); ++i) {
        os << words[i] << ',' << format_float(r.fwt->correlation[i]) << ',' << format_float(r.fwt->scales.tau[i])
           << '\n';
    }
    return os.str();
}

std::string schedule_csv(const EditResult& r) {
    std::ostringstream os;
    os << "word,key,k,preserve_steps\n";
    const auto& words = r.record.edit_prompt().words;
    for (std::size_t i = 0; i < words.size() && i < r.schedule.word_count(); ++i) {
        os << words[i] << ',' << (r.alignment.is_key(i) ? 1 : 0) << ',' << r.schedule.threshold(i) << ','
           << r.schedule.preserve_steps(i) << '\n';
    }
    return os.str();
}

std::string lookup(const KeyValues& kv, const std::string& key) {
    for (const auto& [k, v] : kv)
        if (k == key) return v;
    return {};
}

}  // namespace

std::vector<EditConfig> SweepGrid::jobs() const {
    std::vector<EditConfig> out;
    for (float lt : lambda_tau)
        for (float lsv : lambda_sv)
            for (float ls : lambda_s) {
                EditConfig c = base;
                c.lambda_tau = lt;
                c.lambda_sv = lsv;
                c.lambda_s = ls;
                out.push_back(std::move(c));
            }
    return out;
}

SweepGrid parse_grid(std::string_view text) {
    SweepGrid g;
    for (const auto& [k, v] : parse_key_values(text)) {
        if (k == "lambda_tau") g.lambda_tau = parse_list(k, v);
        else if (k == "lambda_sv") g.lambda_sv = parse_list(k, v);
        else if (k == "lambda_s") g.lambda_s = parse_list(k, v);
        else apply_setting(g.base, k, v);
    }
    if (g.lambda_tau.empty()) g.lambda_tau = {g.base.lambda_tau};
    if (g.lambda_sv.empty()) g.lambda_sv = {g.base.lambda_sv};
    if (g.lambda_s.empty()) g.lambda_s = {g.base.lambda_s};
    for (const auto& job : g.jobs()) job.validate();
    return g;
}

std::string sweep_dir_name(const EditConfig& cfg) {
    return "lt=" + format_float(cfg.lambda_tau) + "_lsv=" + format_float(cfg.lambda_sv) +
           "_ls=" + format_float(cfg.lambda_s);
}

fs::path output_root(const GlobalOptions& g, const KeyValues& job) {
    if (g.out) return *g.out;
    if (const std::string v = lookup(job, "out_dir"); !v.empty()) return v;
    if (const char* env = std::getenv("ADAPEDIT_OUT"); env && *env) return env;
    return "./out";
}

EditConfig resolve_config(const GlobalOptions& g, const Overrides& overrides) {
    const KeyValues job = load_job(g);
    EditConfig cfg;
    for (const auto& [k, v] : job) apply_setting(cfg, k, v);
    for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
    if (g.backend) cfg.backend = *g.backend;
    if (g.seed) cfg.seed = *g.seed;
    cfg.out_dir = output_root(g, job).string();
    cfg.validate();
    return cfg;
}

void write_run(const fs::path& dir, const EditConfig& cfg, const EditResult& r) {
    fs::create_directories(dir);
    write_file(dir / "x.png", encode_png(r.x));
    write_file(dir / "x_star.png", encode_png(r.x_star));
    write_text(dir / "scales.csv", scales_csv(r));
    write_text(dir / "schedule.csv", schedule_csv(r));
    const Matrix s = r.spatial ? r.spatial->s : Matrix(1, kAggregateGrid.pixels());
    write_file(dir / "spatial.png", encode_png(heatmap(s.row(0), kAggregateGrid)));
    write_text(dir / "manifest.txt", format_manifest(cfg));
    save_record(r.record, dir / "record.bin");
}

int cmd_edit(const GlobalOptions& g, const Overrides& overrides, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const EditConfig cfg = resolve_config(g, overrides);
        auto backend = make_backend(cfg);
        const EditResult r = run_edit(cfg, *backend);
        backend->close();
        for (const auto& w : r.warnings) err << "warning: " << w << '\n';
        write_run(cfg.out_dir, cfg, r);
        out << "wrote " << cfg.out_dir << '\n';
        return static_cast<int>(kOk);
    });
}

int cmd_toy_demo(const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    Overrides demo{{"prompt", "a dog standing on the grass"}, {"edit", "a dog sitting on the grass"}};
    GlobalOptions g2 = g;
    if (!g2.seed) g2.seed = 42;
    if (!g2.backend) g2.backend = "toy";
    return cmd_edit(g2, demo, out, err);
}

int cmd_sweep(const GlobalOptions& g, const fs::path& grid_file, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        SweepGrid grid = parse_grid(read_text(grid_file));
        const KeyValues job = parse_key_values(read_text(grid_file));
        if (g.backend) grid.base.backend = *g.backend;
        if (g.seed) grid.base.seed = *g.seed;
        const fs::path root = output_root(g, job);
        grid.base.out_dir = root.string();
        std::vector<EditConfig> jobs = grid.jobs();
        for (auto& j : jobs) {
            j.out_dir = (root / sweep_dir_name(j)).string();
            j.validate();
        }

        // The collection pass does not depend on the swept parameters.
        CollectResult pass1;
        {
            auto backend = make_backend(grid.base);
            pass1 = collect_pass(grid.base, *backend);
            backend->close();
        }

        struct Row {
            double divergence = 0.0;
            double l2 = 0.0;
            int preserve = 0;
            std::string status;
        };
        std::vector<Row> rows(jobs.size());
        std::atomic<std::size_t> next{0};
        std::mutex log_mutex;
        auto worker = [&] {
            for (std::size_t i = next++; i < jobs.size(); i = next++) {
                Row& row = rows[i];
                try {
                    auto backend = make_backend(jobs[i]);
                    const EditResult r = run_edit(jobs[i], *backend, pass1);
                    backend->close();
                    write_run(jobs[i].out_dir, jobs[i], r);
                    row.divergence = r.map_divergence;
                    row.l2 = image_l2(r.x, r.x_star);
                    row.preserve = r.schedule.total_preserve_steps();
                    row.status = "ok";
                } catch (const std::exception& e) {
                    row.status = std::string("error: ") + e.what();
                    std::replace(row.status.begin(), row.status.end(), ',', ';');
                    std::lock_guard lock(log_mutex);
                    err << "job " << sweep_dir_name(jobs[i]) << " failed: " << e.what() << '\n';
                }
            }
        };
        unsigned n = g.jobs ? g.jobs : std::max(1u, std::thread::hardware_concurrency());
        n = static_cast<unsigned>(std::min<std::size_t>(n, jobs.size()));
        std::vector<std::jthread> pool;
        for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
        worker();
        pool.clear();

        std::ostringstream csv;
        csv << "lambda_tau,lambda_sv,lambda_s,map_divergence,image_l2,preserve_steps,status\n";
        std::size_t failed = 0;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            const Row& r = rows[i];
            if (r.status != "ok") ++failed;
            char div[32], l2[32];
            std::snprintf(div, sizeof div, "%.9g", r.divergence);
            std::snprintf(l2, sizeof l2, "%.9g", r.l2);
            csv << format_float(jobs[i].lambda_tau) << ',' << format_float(jobs[i].lambda_sv) << ','
                << format_float(jobs[i].lambda_s) << ',' << div << ',' << l2 << ',' << r.preserve << ',' << r.status
                << '\n';
        }
        fs::create_directories(root);
        write_text(root / "summary.csv", csv.str());
        out << "ran " << jobs.size() << " jobs (" << failed << " failed), wrote " << (root / "summary.csv").string()
            << '\n';
        return failed == jobs.size() ? static_cast<int>(kFailure) : static_cast<int>(kOk);
    });
}

int cmd_inspect_attn(const GlobalOptions& g, const std::optional<fs::path>& run_dir, int step,
                     const std::vector<std::string>& words, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() -> int {
        const fs::path dir = run_dir ? *run_dir : output_root(g, load_job(g));
        const fs::path record_path = dir / "record.bin";
        if (!fs::exists(record_path)) {
            err << "error: no attention record at " << record_path.string() << '\n';
            return kMissingRecord;
        }
        const AttnRecord rec = load_record(record_path);
        if (!rec.has(step)) throw ConfigError("step " + std::to_string(step) + " is outside 1.." + std::to_string(rec.steps()));
        float alpha = MaskThreshold::kDefault;
        if (fs::exists(dir / "manifest.txt")) {
            for (const auto& [k, v] : parse_key_values(read_text(dir / "manifest.txt")))
                if (k == "alpha_m") alpha = parse_float(k, v);
        }
        const MaskThreshold mask(alpha);

        std::vector<std::string> wanted = words;
        if (wanted.empty()) wanted = rec.edit_prompt().words;
        const fs::path attn_dir = dir / "attn";
        fs::create_directories(attn_dir);
        for (const auto& word : wanted) {
            std::string key = word;
            std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
            const TokenizedPrompt* prompt = nullptr;
            Branch branch = Branch::Edit;
            std::size_t index = 0;
            for (const auto& [p, b] : {std::pair{&rec.edit_prompt(), Branch::Edit}, {&rec.source_prompt(), Branch::Source}}) {
                const auto it = std::find(p->keys.begin(), p->keys.end(), key);
                if (it != p->keys.end()) {
                    prompt = p;
                    branch = b;
                    index = static_cast<std::size_t>(it - p->keys.begin());
                    break;
                }
            }
            if (!prompt) throw ConfigError("word '" + word + "' is not in either prompt");
            const AggregatedMap agg = aggregate_maps(rec.at(step).maps(branch), rec.layers(), step);
            const TokenSpan span = prompt->word_spans[index];
            std::vector<std::size_t> rows;
            for (std::size_t p = span.begin; p < span.end; ++p) rows.push_back(p);
            const Matrix word_map = mean_rows(agg.map, rows);
            const std::string stem = "attn_" + key + "_t" + std::to_string(step);
            write_file(attn_dir / (stem + ".png"), encode_png(heatmap(word_map.row(0), kAggregateGrid)));
            const Matrix masked = mask_below(word_map, mask);
            write_file(attn_dir / (stem + "_masked.png"), encode_png(heatmap(masked.row(0), kAggregateGrid)));
            out << "wrote " << (attn_dir / (stem + ".png")).string() << '\n';
        }
        return kOk;
    });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Training-free attention editing for text-to-image diffusion", "adapedit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    std::string config, backend, outdir;
    std::uint64_t seed = 0;
    app.add_option("--config", config, "Job file (key = value lines)");
    app.add_option("--backend", backend, "toy or remote:<host:port>");
    app.add_option("--seed", seed, "Noise seed");
    app.add_option("--out", outdir, "Output root (default: $ADAPEDIT_OUT or ./out)");
    app.add_option("--jobs", g.jobs, "Parallel sweep jobs (default: logical cores)");

    auto* edit = app.add_subcommand("edit", "Run one edit");
    struct EditFlag {
        const char* flag;
        const char* key;
        std::string value;
    };
    std::array<EditFlag, 9> edit_flags{{{"--prompt", "prompt", {}},
                                        {"--edit", "edit", {}},
                                        {"--lambda-tau", "lambda_tau", {}},
                                        {"--lambda-sv", "lambda_sv", {}},
                                        {"--lambda-s", "lambda_s", {}},
                                        {"--alpha-m", "alpha_m", {}},
                                        {"--steps", "steps", {}},
                                        {"--guidance", "guidance", {}},
                                        {"--dps-per-step", "dps.per_step", {}}}};
    for (auto& f : edit_flags) edit->add_option(f.flag, f.value, std::string("Overrides ") + f.key);

    auto* sweep = app.add_subcommand("sweep", "Run a hyper-parameter grid");
    std::string grid_file;
    sweep->add_option("grid", grid_file, "Grid file")->required();

    auto* inspect = app.add_subcommand("inspect-attn", "Dump per-word attention heatmaps from a run");
    std::string run_dir;
    int step = 1;
    std::vector<std::string> words;
    inspect->add_option("--run", run_dir, "Run directory (default: output root)");
    inspect->add_option("--step", step, "Denoising step (default 1)");
    inspect->add_option("--word", words, "Word to dump (repeatable; default: every edited word)");

    auto* demo = app.add_subcommand("toy-demo", "Fixed demo edit on the toy backend");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidConfig;
    }

    if (!config.empty()) g.config = config;
    if (!backend.empty()) g.backend = backend;
    if (app.count("--seed")) g.seed = seed;
    if (!outdir.empty()) g.out = outdir;

    if (*edit) {
        Overrides overrides;
        for (const auto& f : edit_flags)
            if (edit->count(f.flag)) overrides[f.key] = f.value;
        return cmd_edit(g, overrides, out, err);
    }
    if (*sweep) return cmd_sweep(g, grid_file, out, err);
    if (*inspect) {
        return cmd_inspect_attn(g, run_dir.empty() ? std::nullopt : std::optional<fs::path>(run_dir), step, words,
                                out, err);
    }
    if (*demo) return cmd_toy_demo(g, out, err);
    return kInvalidConfig;
}

}  // namespace adapedit::cli
