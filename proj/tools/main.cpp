// meterbench: synthetic-data benchmark harness and reference pipeline for
// hourly building energy prediction. See README.md for the full loop.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "meterbench/config.hpp"
#include "meterbench/csv.hpp"
#include "meterbench/dataset.hpp"
#include "meterbench/error.hpp"
#include "meterbench/pipeline.hpp"
#include "meterbench/scoring.hpp"
#include "meterbench/synth.hpp"

namespace fs = std::filesystem;
using namespace meterbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1; // usage / config errors
constexpr int kExitData = 2;  // data validation errors
constexpr int kExitInternal = 3;

struct GlobalArgs {
    std::string config_path;
    std::string work_dir_override;
    std::optional<std::uint64_t> seed_override;
    int threads = 1;
};

PipelineConfig load_config_with_overrides(const GlobalArgs& g) {
    if (g.config_path.empty()) throw ConfigError("--config is required for this command");
    PipelineConfig cfg = load_pipeline_config(g.config_path);
    if (!g.work_dir_override.empty()) cfg.work_dir = g.work_dir_override;
    if (g.seed_override) cfg.seed = *g.seed_override;
    return cfg;
}

void print_stage(const StageStatus& s) {
    std::printf("[%s] %s\n", s.stage.c_str(), s.cached ? "skipped (cache hit)" : s.summary.c_str());
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
    const SyntheticSpec spec = load_synthetic_spec(spec_path);
    const SynthManifest manifest = generate_synthetic(spec, out_dir);
    const auto& s = manifest.summary();
    std::printf("generated %s buildings=%s meters=%s train_rows=%s test_rows=%s defects=%s\n",
                out_dir.c_str(), s.get("buildings").c_str(), s.get("meters").c_str(),
                s.get("train_rows").c_str(), s.get("test_rows").c_str(), s.get("defects").c_str());
    return kExitOk;
}

int cmd_run(const GlobalArgs& g, bool force, const std::string& only_stage = "") {
    PipelineConfig cfg = load_config_with_overrides(g);
    RunOptions opt;
    opt.threads = g.threads;
    opt.force = force;
    WorkDirLock lock(cfg.work_dir);
    Pipeline pipeline(std::move(cfg), opt);
    if (!only_stage.empty()) {
        print_stage(pipeline.run_stage(only_stage));
    } else {
        for (const auto& s : Pipeline::stage_names()) print_stage(pipeline.run_stage(s));
        std::printf("submission: %s\n", pipeline.submission_path().string().c_str());
    }
    return kExitOk;
}

int cmd_score(const std::string& submission_path, const std::string& data_dir,
              const std::string& truth_path, const std::string& team,
              const std::vector<int>& excluded_sites, int public_year, int private_year,
              const std::string& out_path) {
    const auto test_rows = load_test_rows((fs::path(data_dir) / "test.csv").string());
    RejectsReport rejects;
    const auto buildings =
        load_building_meta_csv((fs::path(data_dir) / "building_meta.csv").string(), rejects);
    const std::string truth_file =
        truth_path.empty() ? (fs::path(data_dir) / "ground_truth.csv").string() : truth_path;
    const auto truth = load_prediction_csv(truth_file, test_rows.size());
    const auto preds = load_prediction_csv(submission_path, test_rows.size());

    SplitSpec split;
    split.public_year = public_year;
    split.private_year = private_year;
    for (const int s : excluded_sites) split.excluded_site_ids.insert(s);

    const ScoreReport rep = score_submission(preds, truth, test_rows, buildings, split, team);
    std::printf("team=%s public=%.6f private=%.6f public_rows=%zu private_rows=%zu excluded_rows=%zu\n",
                rep.team.c_str(), rep.public_eps, rep.private_eps, rep.public_rows,
                rep.private_rows, rep.excluded_rows);
    for (const auto& [meter, eps] : rep.private_by_meter) {
        const auto pub = rep.public_by_meter.find(meter);
        std::printf("  meter %s: public=%.6f private=%.6f\n",
                    meter_name(static_cast<MeterType>(meter)),
                    pub == rep.public_by_meter.end() ? 0.0 : pub->second, eps);
    }
    if (!out_path.empty()) rep.write(out_path);
    return kExitOk;
}

int cmd_leaderboard(const std::string& dir) {
    std::vector<TeamScore> scores;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".score")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const ScoreReport rep = load_score_report(f.string());
        scores.push_back({rep.team.empty() ? f.stem().string() : rep.team, rep.public_eps,
                          rep.private_eps});
    }
    if (scores.empty()) throw DataError("no .score files in " + dir);
    const auto board = build_leaderboard(std::move(scores));
    std::fputs(format_leaderboard(board).c_str(), stdout);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"meterbench: hourly building-energy prediction benchmark harness"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "pipeline config file (JSON)");
    app.add_option("--seed", g.seed_override, "override the config seed");
    app.add_option("--threads", g.threads, "worker threads for training/prediction")
        ->default_val(1);
    app.add_option("--work-dir", g.work_dir_override, "override the config work dir");

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_spec, synth_out;
    synth->add_option("--spec", synth_spec, "synthetic spec file (JSON)")->required();
    synth->add_option("--out", synth_out, "output directory")->required();

    bool force = false;
    auto* run = app.add_subcommand("run", "run the full pipeline");
    run->add_flag("--force", force, "ignore stage caches");
    for (const auto& stage : Pipeline::stage_names())
        app.add_subcommand(stage, "run only the " + stage + " stage");

    auto* score = app.add_subcommand("score", "score a submission against ground truth");
    std::string score_submission_path, score_data, score_truth, score_team = "team", score_out;
    std::vector<int> score_excluded;
    int public_year = 2017, private_year = 2018;
    score->add_option("--submission", score_submission_path, "submission csv")->required();
    score->add_option("--data", score_data, "dir with test.csv and building_meta.csv")->required();
    score->add_option("--truth", score_truth, "ground truth csv (default: <data>/ground_truth.csv)");
    score->add_option("--team", score_team, "team name for the report");
    score->add_option("--exclude-sites", score_excluded,
                      "site ids excluded from private scoring");
    score->add_option("--public-year", public_year, "public split year")->default_val(2017);
    score->add_option("--private-year", private_year, "private split year")->default_val(2018);
    score->add_option("--out", score_out, "write a .score report file");

    auto* lb = app.add_subcommand("leaderboard", "rank scored submissions in a directory");
    std::string lb_dir;
    lb->add_option("--dir", lb_dir, "directory of .score files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_spec, synth_out);
        if (run->parsed()) return cmd_run(g, force);
        for (const auto& stage : Pipeline::stage_names())
            if (app.get_subcommand(stage)->parsed()) return cmd_run(g, force, stage);
        if (score->parsed())
            return cmd_score(score_submission_path, score_data, score_truth, score_team,
                             score_excluded, public_year, private_year, score_out);
        if (lb->parsed()) return cmd_leaderboard(lb_dir);
        std::fprintf(stderr, "error: no command\n");
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    }
}
