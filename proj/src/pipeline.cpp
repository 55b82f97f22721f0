#include "meterbench/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fcntl.h>
#include <unistd.h>

#include <json.hpp>

#include "meterbench/baselines.hpp"
#include "meterbench/csv.hpp"
#include "meterbench/error.hpp"
#include "meterbench/features.hpp"
#include "meterbench/records.hpp"
#include "meterbench/rng.hpp"
#include "meterbench/sha256.hpp"
#include "meterbench/synth.hpp"
#include "meterbench/weather.hpp"

namespace meterbench {

namespace fs = std::filesystem;
using nlohmann::json;

WorkDirLock::WorkDirLock(const fs::path& work_dir) {
    fs::create_directories(work_dir);
    path_ = work_dir / ".lock";
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
        throw ConfigError("work dir is locked by another run (" + path_.string() +
                          " exists; remove it if that run is gone)");
    const std::string pid = std::to_string(::getpid()) + "\n";
    const auto written = ::write(fd, pid.data(), pid.size());
    (void)written;
    ::close(fd);
    held_ = true;
}

WorkDirLock::~WorkDirLock() {
    if (held_) {
        std::error_code ec;
        fs::remove(path_, ec);
    }
}

Pipeline::Pipeline(PipelineConfig config, RunOptions options)
    : cfg_(std::move(config)), opt_(options), data_dir_(cfg_.data_dir), work_dir_(cfg_.work_dir) {
    if (opt_.threads < 1) opt_.threads = 1;
    fs::create_directories(work_dir_);
}

const std::vector<std::string>& Pipeline::stage_names() {
    static const std::vector<std::string> names = {"ingest", "clean", "featurize",
                                                   "train",  "predict", "blend"};
    return names;
}

namespace {

std::string file_digest_or_missing(const fs::path& p) {
    std::error_code ec;
    if (!fs::exists(p, ec)) return "<missing>";
    return sha256_file_hex(p.string());
}

std::vector<double> kwh_from_log(const std::vector<double>& logv) {
    std::vector<double> out(logv.size());
    for (std::size_t i = 0; i < logv.size(); ++i) out[i] = std::max(0.0, std::expm1(logv[i]));
    return out;
}

} // namespace

bool Pipeline::is_cached(const std::string& stage, const StageIo& io) const {
    if (opt_.force) return false;
    const fs::path stamp_path = work_dir_ / (stage + ".stamp");
    if (!fs::exists(stamp_path)) return false;
    std::map<std::string, std::string> recorded_inputs, recorded_outputs;
    std::string recorded_config;
    try {
        for (const auto& r : read_records(stamp_path.string())) {
            if (r.kind == "stage") recorded_config = r.get("config_sha");
            if (r.kind == "input") recorded_inputs[r.get("path")] = r.get("sha256");
            if (r.kind == "output") recorded_outputs[r.get("path")] = r.get("sha256");
        }
    } catch (const DataError&) {
        return false;
    }
    if (recorded_config != sha256_hex(io.config_digest)) return false;
    std::map<std::string, std::string> current_inputs;
    for (const auto& p : io.inputs) current_inputs[p.string()] = file_digest_or_missing(p);
    if (current_inputs != recorded_inputs) return false;
    // outputs must still be exactly what the stage wrote
    for (const auto& [path, sha] : recorded_outputs)
        if (file_digest_or_missing(path) != sha) return false;
    return !recorded_outputs.empty();
}

void Pipeline::write_stamp(const std::string& stage, const StageIo& io) const {
    std::vector<Record> recs;
    Record s;
    s.kind = "stage";
    s.set("name", stage).set("config_sha", sha256_hex(io.config_digest));
    recs.push_back(std::move(s));
    for (const auto& p : io.inputs) {
        Record r;
        r.kind = "input";
        r.set("path", p.string()).set("sha256", file_digest_or_missing(p));
        recs.push_back(std::move(r));
    }
    for (const auto& p : io.outputs) {
        Record r;
        r.kind = "output";
        r.set("path", p.string()).set("sha256", file_digest_or_missing(p));
        recs.push_back(std::move(r));
    }
    write_records((work_dir_ / (stage + ".stamp")).string(), recs);
}

StageStatus Pipeline::run_stage(const std::string& stage) {
    if (stage == "ingest") return do_ingest();
    if (stage == "clean") return do_clean();
    if (stage == "featurize") return do_featurize();
    if (stage == "train") return do_train();
    if (stage == "predict") return do_predict();
    if (stage == "blend") return do_blend();
    throw ConfigError("unknown stage: " + stage);
}

std::vector<StageStatus> Pipeline::run_all() {
    std::vector<StageStatus> out;
    for (const auto& s : stage_names()) out.push_back(run_stage(s));
    return out;
}

StageStatus Pipeline::do_ingest() {
    const fs::path out_dir = work_dir_ / "ingest";
    StageIo io;
    io.config_digest = cfg_.section_digests.at("ingest");
    for (const char* f : {"train.csv", "building_meta.csv", "weather_train.csv", "test.csv"})
        io.inputs.push_back(data_dir_ / f);
    const bool have_weather_test = fs::exists(data_dir_ / "weather_test.csv");
    if (have_weather_test) io.inputs.push_back(data_dir_ / "weather_test.csv");
    io.outputs = {out_dir / "train.csv",   out_dir / "building_meta.csv",
                  out_dir / "weather.csv", out_dir / "test.csv",
                  out_dir / "rejects.txt", out_dir / "report.txt"};
    if (is_cached("ingest", io)) return {"ingest", true, "cached"};

    fs::create_directories(out_dir);
    TrainingBundle bundle = load_training_bundle(data_dir_.string());
    const auto test_rows = load_test_rows((data_dir_ / "test.csv").string());

    write_readings_csv((out_dir / "train.csv").string(), bundle.readings);
    write_building_meta_csv((out_dir / "building_meta.csv").string(), bundle.buildings);
    write_weather_csv((out_dir / "weather.csv").string(), bundle.weather);
    write_test_rows_csv((out_dir / "test.csv").string(), test_rows);
    bundle.rejects.write((out_dir / "rejects.txt").string());

    std::vector<Record> report;
    Record r;
    r.kind = "ingest";
    r.set_int("readings", (std::int64_t)bundle.readings.size());
    r.set_int("buildings", (std::int64_t)bundle.buildings.size());
    r.set_int("weather_rows", (std::int64_t)bundle.weather.size());
    r.set_int("test_rows", (std::int64_t)test_rows.size());
    r.set_int("rejects", (std::int64_t)bundle.rejects.entries.size());
    r.set_int("rows_dropped", (std::int64_t)bundle.rejects.dropped_count());
    report.push_back(std::move(r));
    write_records((out_dir / "report.txt").string(), report);

    write_stamp("ingest", io);
    return {"ingest", false,
            "readings=" + std::to_string(bundle.readings.size()) +
                " rejects=" + std::to_string(bundle.rejects.entries.size())};
}

StageStatus Pipeline::do_clean() {
    const fs::path in_dir = work_dir_ / "ingest";
    const fs::path out_dir = work_dir_ / "clean";
    StageIo io;
    io.config_digest = cfg_.section_digests.at("clean");
    io.inputs = {in_dir / "train.csv", in_dir / "building_meta.csv"};
    io.outputs = {out_dir / "train.csv", out_dir / "cleaning_report.txt"};
    for (const auto& p : io.inputs)
        if (!fs::exists(p)) throw ConfigError("clean: missing " + p.string() + " (run ingest first)");
    if (is_cached("clean", io)) return {"clean", true, "cached"};

    fs::create_directories(out_dir);
    RejectsReport rejects;
    auto readings = load_readings_csv((in_dir / "train.csv").string(), rejects);
    auto buildings = load_building_meta_csv((in_dir / "building_meta.csv").string(), rejects);
    auto [cleaned, report] = apply_cleaning(std::move(readings), buildings, cfg_.cleaning_rules);
    write_readings_csv((out_dir / "train.csv").string(), cleaned);
    report.write((out_dir / "cleaning_report.txt").string());

    write_stamp("clean", io);
    return {"clean", false,
            "rows_in=" + std::to_string(report.rows_in) +
                " rows_out=" + std::to_string(report.rows_out) +
                " dropped=" + std::to_string(report.rows_dropped())};
}

StageStatus Pipeline::do_featurize() {
    const fs::path ingest_dir = work_dir_ / "ingest";
    const fs::path clean_dir = work_dir_ / "clean";
    const fs::path out_dir = work_dir_ / "featurize";
    StageIo io;
    io.config_digest = cfg_.section_digests.at("featurize");
    io.inputs = {clean_dir / "train.csv", ingest_dir / "building_meta.csv",
                 ingest_dir / "weather.csv", ingest_dir / "test.csv"};
    io.outputs = {out_dir / "train.fmat", out_dir / "test.fmat", out_dir / "report.txt"};
    for (const auto& p : io.inputs)
        if (!fs::exists(p))
            throw ConfigError("featurize: missing " + p.string() + " (run earlier stages first)");
    if (is_cached("featurize", io)) return {"featurize", true, "cached"};

    fs::create_directories(out_dir);
    RejectsReport rejects;
    const auto readings = load_readings_csv((clean_dir / "train.csv").string(), rejects);
    const auto buildings = load_building_meta_csv((ingest_dir / "building_meta.csv").string(), rejects);
    auto weather = load_weather_csv((ingest_dir / "weather.csv").string(), rejects);
    const auto test_rows = load_test_rows((ingest_dir / "test.csv").string());

    // timezone correction before gridding
    std::vector<Record> report;
    if (cfg_.weather.timezone_correction) {
        std::set<int> sites;
        for (const auto& w : weather) sites.insert(w.site_id);
        for (const int site : sites) {
            const auto offset = estimate_timezone_offset(weather, site);
            Record r;
            r.kind = "timezone";
            r.set_int("site", site);
            if (offset) {
                r.set_int("offset", *offset);
                if (*offset != 0) apply_timezone_offset(weather, site, *offset);
            } else {
                r.set("offset", "unknown");
            }
            report.push_back(std::move(r));
        }
    }
    const WeatherGrid grid = impute_weather(weather, cfg_.weather.max_gap_linear);

    HolidayCalendars calendars;
    if (!cfg_.holidays.default_path.empty())
        calendars.fallback = load_holiday_calendar(cfg_.holidays.default_path);
    for (const auto& [site, path] : cfg_.holidays.per_site)
        calendars.per_site[site] = load_holiday_calendar(path);

    FeatureBuilder builder(recipe_by_name(cfg_.features.recipe), calendars,
                           cfg_.features.encoder_folds);
    const FeatureMatrix train = builder.fit_build(readings, grid, buildings);
    std::vector<RowKey> test_keys;
    test_keys.reserve(test_rows.size());
    for (const auto& t : test_rows) test_keys.push_back({t.building_id, t.meter, t.ts});
    const FeatureMatrix test = builder.build(test_keys, grid, buildings);

    write_fmat((out_dir / "train.fmat").string(), train);
    write_fmat((out_dir / "test.fmat").string(), test);

    Record r;
    r.kind = "featurize";
    r.set("recipe", cfg_.features.recipe);
    r.set_int("features", (std::int64_t)train.n_cols());
    r.set_int("train_rows", (std::int64_t)train.n_rows());
    r.set_int("test_rows", (std::int64_t)test.n_rows());
    r.set_int("imputed_weather_cells", (std::int64_t)grid.imputed_cells());
    report.push_back(std::move(r));
    write_records((out_dir / "report.txt").string(), report);

    write_stamp("featurize", io);
    return {"featurize", false,
            "features=" + std::to_string(train.n_cols()) +
                " train_rows=" + std::to_string(train.n_rows()) +
                " test_rows=" + std::to_string(test.n_rows())};
}

StageStatus Pipeline::do_train() {
    const fs::path feat_dir = work_dir_ / "featurize";
    const fs::path clean_dir = work_dir_ / "clean";
    const fs::path out_dir = work_dir_ / "train";
    StageIo io;
    io.config_digest = cfg_.section_digests.at("train");
    io.inputs = {feat_dir / "train.fmat"};
    if (cfg_.model.kind == ModelKind::hourweek) io.inputs.push_back(clean_dir / "train.csv");
    for (const auto& p : io.inputs)
        if (!fs::exists(p))
            throw ConfigError("train: missing " + p.string() + " (run earlier stages first)");

    // output list depends on the ensemble layout, so probe the stamp only
    // after declaring outputs from it
    {
        StageIo probe = io;
        const fs::path stamp = work_dir_ / "train.stamp";
        if (!opt_.force && fs::exists(stamp)) {
            try {
                for (const auto& r : read_records(stamp.string()))
                    if (r.kind == "output") probe.outputs.push_back(r.get("path"));
            } catch (const DataError&) {
            }
            if (!probe.outputs.empty() && is_cached("train", probe))
                return {"train", true, "cached"};
        }
    }

    fs::remove_all(out_dir);
    fs::create_directories(out_dir);
    const FeatureMatrix train = read_fmat((feat_dir / "train.fmat").string());
    io.outputs.push_back(out_dir / "info.json");

    json info;
    info["schema_version"] = 1;
    info["kind"] = model_kind_name(cfg_.model.kind);

    if (cfg_.model.kind == ModelKind::gbt_cv) {
        const FoldPlan fold_plan = make_fold_plan(train, cfg_.model.fold_kind, cfg_.model.fold_k);
        const auto actual_kwh = kwh_from_log(train.target());
        json members = json::array();
        for (std::size_t mi = 0; mi < cfg_.model.members.size(); ++mi) {
            const MemberConfig& mc = cfg_.model.members[mi];
            GbtParams params = mc.gbt;
            params.seed = mix_seed(cfg_.seed, 0x4347, mi, params.seed);
            const CvEnsemble ens =
                fit_cv_ensemble(train, params, fold_plan, cfg_.model.subset, opt_.threads);
            const fs::path member_dir = out_dir / mc.name;
            fs::create_directories(member_dir);
            json jmember;
            jmember["name"] = mc.name;
            jmember["k"] = ens.k;
            jmember["subset"] = subset_key_name(ens.subset);
            jmember["groups"] = ens.groups;
            jmember["warnings"] = ens.warnings;
            for (std::size_t gi = 0; gi < ens.groups.size(); ++gi) {
                for (int f = 0; f < ens.k; ++f) {
                    const fs::path model_path =
                        member_dir / ("g" + std::to_string(gi) + "_f" + std::to_string(f) + ".json");
                    save_gbt(ens.models[gi * (std::size_t)ens.k + (std::size_t)f],
                             model_path.string());
                    io.outputs.push_back(model_path);
                }
            }
            // out-of-fold predictions, kWh, for blend-weight optimization
            const auto oof_kwh = kwh_from_log(ens.oof);
            const fs::path oof_path = out_dir / ("oof_" + mc.name + ".csv");
            {
                CsvWriter w(oof_path.string());
                w.write_row({"building_id", "meter", "timestamp", "actual", "prediction"});
                for (std::size_t i = 0; i < train.n_rows(); ++i) {
                    const RowKey& k = train.keys()[i];
                    w.write_row({format_int(k.building_id), format_int((int)k.meter),
                                 format_hour(k.ts), format_double(actual_kwh[i]),
                                 format_double(oof_kwh[i])});
                }
                w.close();
            }
            io.outputs.push_back(oof_path);
            members.push_back(std::move(jmember));
        }
        info["members"] = std::move(members);
        info["fold_k"] = fold_plan.k;
    } else if (cfg_.model.kind == ModelKind::linear) {
        const LinearModel lm = fit_linear_baseline(train);
        const fs::path model_path = out_dir / "linear.json";
        save_linear(lm, model_path.string());
        io.outputs.push_back(model_path);
        info["members"] = json::array({json({{"name", "linear"}})});
    } else { // hourweek
        RejectsReport rejects;
        const auto readings = load_readings_csv((clean_dir / "train.csv").string(), rejects);
        const HourWeekModel hw = fit_hourweek(readings);
        const fs::path model_path = out_dir / "hourweek.json";
        save_hourweek(hw, model_path.string());
        io.outputs.push_back(model_path);
        info["members"] = json::array({json({{"name", "hourweek"}})});
    }

    {
        std::ofstream out((out_dir / "info.json").string(), std::ios::binary);
        out << info.dump(2);
        out.close();
        if (out.fail()) throw DataError("write failed: " + (out_dir / "info.json").string());
    }
    write_stamp("train", io);
    std::size_t n_models = 0;
    for (const auto& p : io.outputs)
        if (p.extension() == ".json" && p.filename() != "info.json") ++n_models;
    return {"train", false, "models=" + std::to_string(n_models)};
}

StageStatus Pipeline::do_predict() {
    const fs::path feat_dir = work_dir_ / "featurize";
    const fs::path train_dir = work_dir_ / "train";
    const fs::path ingest_dir = work_dir_ / "ingest";
    const fs::path out_dir = work_dir_ / "predict";
    StageIo io;
    io.config_digest = cfg_.section_digests.at("predict");
    io.inputs = {feat_dir / "test.fmat", train_dir / "info.json"};
    for (const auto& p : io.inputs)
        if (!fs::exists(p))
            throw ConfigError("predict: missing " + p.string() + " (run earlier stages first)");

    std::vector<std::string> member_names;
    json info;
    {
        std::ifstream in((train_dir / "info.json").string());
        in >> info;
        for (const auto& m : info["members"]) member_names.push_back(m["name"]);
    }
    for (const auto& name : member_names) io.outputs.push_back(out_dir / (name + ".csv"));
    if (is_cached("predict", io)) return {"predict", true, "cached"};

    fs::create_directories(out_dir);
    const FeatureMatrix test = read_fmat((feat_dir / "test.fmat").string());
    const std::string kind = info["kind"];

    if (kind == "gbt_cv") {
        for (const auto& jmember : info["members"]) {
            const std::string name = jmember["name"];
            CvEnsemble ens;
            ens.k = jmember["k"];
            ens.subset = subset_key_from_name(jmember["subset"]);
            ens.groups = jmember["groups"].get<std::vector<std::string>>();
            for (const auto& g : ens.groups) ens.routing[g] = true;
            ens.models.resize(ens.groups.size() * (std::size_t)ens.k);
            for (std::size_t gi = 0; gi < ens.groups.size(); ++gi)
                for (int f = 0; f < ens.k; ++f)
                    ens.models[gi * (std::size_t)ens.k + (std::size_t)f] = load_gbt(
                        (train_dir / name / ("g" + std::to_string(gi) + "_f" + std::to_string(f) +
                                             ".json"))
                            .string());
            const auto log_pred = predict_cv(ens, test, opt_.threads);
            write_prediction_csv((out_dir / (name + ".csv")).string(), kwh_from_log(log_pred));
        }
    } else if (kind == "linear") {
        const LinearModel lm = load_linear((train_dir / "linear.json").string());
        write_prediction_csv((out_dir / "linear.csv").string(),
                             kwh_from_log(predict_linear(lm, test)));
    } else if (kind == "hourweek") {
        const HourWeekModel hw = load_hourweek((train_dir / "hourweek.json").string());
        write_prediction_csv((out_dir / "hourweek.csv").string(),
                             predict_hourweek(hw, test.keys()));
    } else {
        throw DataError("unknown model kind in train/info.json: " + kind);
    }

    write_stamp("predict", io);
    return {"predict", false, "members=" + std::to_string(member_names.size())};
}

StageStatus Pipeline::do_blend() {
    const fs::path train_dir = work_dir_ / "train";
    const fs::path predict_dir = work_dir_ / "predict";
    const fs::path ingest_dir = work_dir_ / "ingest";
    const fs::path out_dir = work_dir_ / "blend";
    StageIo io;
    io.config_digest = cfg_.section_digests.at("blend");

    std::vector<std::string> member_names;
    {
        const fs::path info_path = train_dir / "info.json";
        if (!fs::exists(info_path))
            throw ConfigError("blend: missing " + info_path.string() + " (run train first)");
        json info;
        std::ifstream in(info_path.string());
        in >> info;
        for (const auto& m : info["members"]) member_names.push_back(m["name"]);
        io.inputs.push_back(info_path);
    }
    const bool optimizing = cfg_.blend.mode == BlendConfig::Mode::optimize;
    for (const auto& name : member_names) {
        io.inputs.push_back(predict_dir / (name + ".csv"));
        if (optimizing) io.inputs.push_back(train_dir / ("oof_" + name + ".csv"));
    }
    io.inputs.push_back(ingest_dir / "test.csv");
    for (const auto& p : io.inputs)
        if (!fs::exists(p))
            throw ConfigError("blend: missing " + p.string() + " (run earlier stages first)");
    io.outputs = {out_dir / "weights.json", work_dir_ / "submission.csv"};
    if (is_cached("blend", io)) return {"blend", true, "cached"};

    fs::create_directories(out_dir);
    const auto test_rows = load_test_rows((ingest_dir / "test.csv").string());
    std::vector<int> test_meters(test_rows.size());
    for (std::size_t i = 0; i < test_rows.size(); ++i)
        test_meters[i] = static_cast<int>(test_rows[i].meter);

    std::vector<std::vector<double>> member_preds;
    for (const auto& name : member_names)
        member_preds.push_back(
            load_prediction_csv((predict_dir / (name + ".csv")).string(), test_rows.size()));

    BlendSpec spec;
    if (optimizing) {
        std::vector<std::vector<double>> oof_members;
        std::vector<double> actuals;
        std::vector<int> oof_meters;
        for (std::size_t mi = 0; mi < member_names.size(); ++mi) {
            CsvReader reader((train_dir / ("oof_" + member_names[mi] + ".csv")).string());
            const auto meter_col = reader.column("meter");
            const auto actual_col = reader.column("actual");
            const auto pred_col = reader.column("prediction");
            if (!meter_col || !actual_col || !pred_col)
                throw DataError("bad OOF file for member " + member_names[mi]);
            std::vector<double> preds;
            std::size_t row = 0;
            while (reader.next_row()) {
                preds.push_back(*parse_double(reader.field(*pred_col)));
                if (mi == 0) {
                    actuals.push_back(*parse_double(reader.field(*actual_col)));
                    oof_meters.push_back((int)*parse_int(reader.field(*meter_col)));
                }
                ++row;
            }
            oof_members.push_back(std::move(preds));
        }
        spec = optimize_weights(oof_members, actuals, cfg_.blend.optimize,
                                cfg_.blend.optimize.per_meter ? &oof_meters : nullptr);
    } else {
        cfg_.blend.fixed.validate(member_names.size());
        spec.overall = cfg_.blend.fixed;
    }

    save_blend_spec(spec, member_names, (out_dir / "weights.json").string());
    const auto blended = blend(member_preds, spec, &test_meters);
    write_prediction_csv(submission_path().string(), blended);

    write_stamp("blend", io);
    return {"blend", false, "rows=" + std::to_string(blended.size()) +
                                " members=" + std::to_string(member_names.size())};
}

} // namespace meterbench
