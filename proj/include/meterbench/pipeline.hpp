#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "meterbench/config.hpp"

namespace meterbench {

struct RunOptions {
    int threads = 1;
    bool force = false; // ignore stage caches
};

// One work dir runs one command at a time.
class WorkDirLock {
public:
    explicit WorkDirLock(const std::filesystem::path& work_dir); // throws ConfigError when held
    ~WorkDirLock();
    WorkDirLock(const WorkDirLock&) = delete;
    WorkDirLock& operator=(const WorkDirLock&) = delete;

private:
    std::filesystem::path path_;
    bool held_ = false;
};

struct StageStatus {
    std::string stage;
    bool cached = false;
    std::string summary;
};

// File-based stage pipeline over one work dir:
//   ingest -> clean -> featurize -> train -> predict -> blend
// Stages are skipped when their config section, inputs and outputs all
// hash to the recorded stamp (content-addressed resume).
class Pipeline {
public:
    Pipeline(PipelineConfig config, RunOptions options);

    static const std::vector<std::string>& stage_names();

    StageStatus run_stage(const std::string& stage); // throws on unknown stage
    std::vector<StageStatus> run_all();

    std::filesystem::path work_dir() const { return work_dir_; }
    std::filesystem::path submission_path() const { return work_dir_ / "submission.csv"; }

private:
    struct StageIo {
        std::vector<std::filesystem::path> inputs;
        std::vector<std::filesystem::path> outputs;
        std::string config_digest;
    };

    bool is_cached(const std::string& stage, const StageIo& io) const;
    void write_stamp(const std::string& stage, const StageIo& io) const;

    StageStatus do_ingest();
    StageStatus do_clean();
    StageStatus do_featurize();
    StageStatus do_train();
    StageStatus do_predict();
    StageStatus do_blend();

    PipelineConfig cfg_;
    RunOptions opt_;
    std::filesystem::path data_dir_;
    std::filesystem::path work_dir_;
};

} // namespace meterbench
