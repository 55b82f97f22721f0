#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "meterbench/blend.hpp"
#include "meterbench/cv.hpp"
#include "meterbench/gbt.hpp"
#include "meterbench/preprocess.hpp"
#include "meterbench/scoring.hpp"

namespace meterbench {

enum class ModelKind { gbt_cv, linear, hourweek };
const char* model_kind_name(ModelKind k);

struct MemberConfig {
    std::string name;
    GbtParams gbt;
};

struct ModelConfig {
    ModelKind kind = ModelKind::gbt_cv;
    std::vector<MemberConfig> members; // gbt_cv only
    FoldKind fold_kind = FoldKind::by_month;
    int fold_k = 3;
    SubsetPlan subset;
};

struct BlendConfig {
    enum class Mode { optimize, fixed } mode = Mode::optimize;
    OptimizeOptions optimize;
    BlendWeights fixed; // mode == fixed
};

struct WeatherConfig {
    int max_gap_linear = 6;
    bool timezone_correction = true;
};

struct FeaturesConfig {
    std::string recipe = "minimal";
    int encoder_folds = 5;
};

struct HolidayConfig {
    std::string default_path;              // optional
    std::map<int, std::string> per_site;   // site_id -> calendar file
};

struct PipelineConfig {
    std::string data_dir;
    std::string work_dir;
    std::uint64_t seed = 1;
    std::vector<CleaningRule> cleaning_rules;
    WeatherConfig weather;
    FeaturesConfig features;
    HolidayConfig holidays;
    ModelConfig model;
    BlendConfig blend;
    SplitSpec split;

    // JSON dump of each config section, for stage cache keys
    std::map<std::string, std::string> section_digests;
};

// Parses and validates a pipeline config file ("schema_version": 1).
// Presets referenced by name (feature recipes) are checked to exist.
PipelineConfig load_pipeline_config(const std::string& path);

} // namespace meterbench
