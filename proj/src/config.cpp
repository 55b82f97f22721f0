#include "meterbench/config.hpp"

#include <fstream>

#include <json.hpp>

#include "meterbench/error.hpp"
#include "meterbench/features.hpp"
#include "meterbench/synth.hpp"

namespace meterbench {

using nlohmann::json;

const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::gbt_cv: return "gbt_cv";
        case ModelKind::linear: return "linear";
        case ModelKind::hourweek: return "hourweek";
    }
    return "?";
}

namespace {

ModelKind model_kind_from_name(const std::string& name) {
    for (const ModelKind k : {ModelKind::gbt_cv, ModelKind::linear, ModelKind::hourweek})
        if (name == model_kind_name(k)) return k;
    throw ConfigError("unknown model kind: " + name);
}

GbtParams parse_gbt_params(const json& j) {
    GbtParams p;
    p.n_trees = j.value("n_trees", p.n_trees);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.max_leaves = j.value("max_leaves", p.max_leaves);
    p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
    p.n_bins = j.value("n_bins", p.n_bins);
    p.l2_leaf_reg = j.value("l2_leaf_reg", p.l2_leaf_reg);
    p.feature_subsample = j.value("feature_subsample", p.feature_subsample);
    p.seed = j.value("seed", p.seed);
    p.early_stopping_rounds = j.value("early_stopping_rounds", p.early_stopping_rounds);
    p.validate();
    return p;
}

RuleScope parse_scope(const json& j) {
    RuleScope s;
    if (j.contains("site_id")) s.site_id = j["site_id"].get<int>();
    if (j.contains("building_id")) s.building_id = j["building_id"].get<int>();
    if (j.contains("meter")) {
        const auto code = j["meter"].get<int>();
        if (!meter_code_valid(code)) throw ConfigError("scope meter code outside 0..3");
        s.meter = static_cast<MeterType>(code);
    }
    return s;
}

CleaningRule parse_rule(const json& j) {
    const std::string kind_name = j.at("kind").get<std::string>();
    const auto kind = rule_kind_from_name(kind_name);
    if (!kind) throw ConfigError("unknown cleaning rule kind: " + kind_name);
    CleaningRule r;
    switch (*kind) {
        case RuleKind::constant_streak: r = default_constant_streak_rule(); break;
        case RuleKind::zero_streak: r = default_zero_streak_rule(); break;
        case RuleKind::site_wide_zero: r = default_site_wide_zero_rule(); break;
        default: r.kind = *kind; break;
    }
    if (j.contains("min_len")) r.min_len = j["min_len"].get<int>();
    if (j.contains("min_fraction")) r.min_fraction = j["min_fraction"].get<double>();
    if (j.contains("factor")) r.factor = j["factor"].get<double>();
    if (j.contains("scope")) r.scope = parse_scope(j["scope"]);
    if (j.contains("intervals")) {
        for (const auto& iv : j["intervals"]) {
            ReadingInterval ri;
            ri.building_id = iv.at("building_id").get<int>();
            const int meter = iv.at("meter").get<int>();
            if (!meter_code_valid(meter)) throw ConfigError("exclusion meter code outside 0..3");
            ri.meter = static_cast<MeterType>(meter);
            const auto start = parse_hour(iv.at("start").get<std::string>());
            const auto end = parse_hour(iv.at("end").get<std::string>());
            if (!start || !end) throw ConfigError("exclusion interval has a malformed timestamp");
            ri.start = *start;
            ri.end = *end;
            r.exclusions.push_back(ri);
        }
    }
    r.validate();
    return r;
}

} // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("missing config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("bad JSON in " + path + ": " + e.what());
    }
    PipelineConfig cfg;
    try {
        if (j.value("schema_version", 0) != 1)
            throw ConfigError(path + ": schema_version must be 1");
        const auto& paths = j.at("paths");
        cfg.data_dir = paths.at("data_dir").get<std::string>();
        cfg.work_dir = paths.at("work_dir").get<std::string>();
        cfg.seed = j.value("seed", std::uint64_t(1));

        if (j.contains("cleaning"))
            for (const auto& r : j["cleaning"].value("rules", json::array()))
                cfg.cleaning_rules.push_back(parse_rule(r));

        if (j.contains("weather")) {
            cfg.weather.max_gap_linear = j["weather"].value("max_gap_linear", 6);
            cfg.weather.timezone_correction = j["weather"].value("timezone_correction", true);
        }

        if (j.contains("features")) {
            cfg.features.recipe = j["features"].value("recipe", "minimal");
            cfg.features.encoder_folds = j["features"].value("encoder_folds", 5);
        }
        recipe_by_name(cfg.features.recipe); // unknown recipe fails here, by name

        if (j.contains("holidays")) {
            cfg.holidays.default_path = j["holidays"].value("default", "");
            if (j["holidays"].contains("per_site"))
                for (const auto& [site, p] : j["holidays"]["per_site"].items())
                    cfg.holidays.per_site[std::stoi(site)] = p.get<std::string>();
        }

        if (j.contains("model")) {
            const auto& m = j["model"];
            cfg.model.kind = model_kind_from_name(m.value("kind", "gbt_cv"));
            if (m.contains("members")) {
                for (const auto& mem : m["members"]) {
                    MemberConfig mc;
                    mc.name = mem.at("name").get<std::string>();
                    if (mc.name.empty() ||
                        mc.name.find_first_not_of("abcdefghijklmnopqrstuvwxyz"
                                                  "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
                            std::string::npos)
                        throw ConfigError("member name must be [A-Za-z0-9_-]+: '" + mc.name + "'");
                    mc.gbt = parse_gbt_params(mem.value("gbt", json::object()));
                    cfg.model.members.push_back(std::move(mc));
                }
            }
            if (cfg.model.kind == ModelKind::gbt_cv && cfg.model.members.empty()) {
                MemberConfig mc;
                mc.name = "gbt";
                cfg.model.members.push_back(std::move(mc));
            }
            {
                std::set<std::string> names;
                for (const auto& mc : cfg.model.members)
                    if (!names.insert(mc.name).second)
                        throw ConfigError("duplicate member name: " + mc.name);
            }
            if (m.contains("fold")) {
                const std::string fk = m["fold"].value("kind", "by_month");
                if (fk == "by_month")
                    cfg.model.fold_kind = FoldKind::by_month;
                else if (fk == "by_row_block")
                    cfg.model.fold_kind = FoldKind::by_row_block;
                else
                    throw ConfigError("unknown fold kind: " + fk);
                cfg.model.fold_k = m["fold"].value("k", 3);
            }
            if (m.contains("subset")) {
                cfg.model.subset.key = subset_key_from_name(m["subset"].value("key", "none"));
                cfg.model.subset.min_group_rows =
                    m["subset"].value("min_group_rows", std::size_t(200));
                cfg.model.subset.ensure_global_fallback =
                    m["subset"].value("ensure_global_fallback", false);
            }
        }

        if (j.contains("blend")) {
            const auto& b = j["blend"];
            const std::string mode = b.value("mode", "optimize");
            if (mode == "optimize") {
                cfg.blend.mode = BlendConfig::Mode::optimize;
                if (b.contains("p_grid"))
                    cfg.blend.optimize.p_grid = b["p_grid"].get<std::vector<double>>();
                cfg.blend.optimize.granularity = b.value("granularity", 0.05);
                cfg.blend.optimize.per_meter = b.value("per_meter", false);
                cfg.blend.optimize.restarts = b.value("restarts", 10);
            } else if (mode == "fixed") {
                cfg.blend.mode = BlendConfig::Mode::fixed;
                cfg.blend.fixed.weights = b.at("weights").get<std::vector<double>>();
                cfg.blend.fixed.p = b.value("p", 1.0);
            } else {
                throw ConfigError("unknown blend mode: " + mode);
            }
        }

        if (j.contains("split")) {
            cfg.split.public_year = j["split"].value("public_year", 2017);
            cfg.split.private_year = j["split"].value("private_year", 2018);
            if (j["split"].contains("excluded_site_ids"))
                for (const auto& s : j["split"]["excluded_site_ids"])
                    cfg.split.excluded_site_ids.insert(s.get<int>());
            if (cfg.split.public_year == cfg.split.private_year)
                throw ConfigError("split: public and private years must differ");
        }

        // per-section digests drive the stage cache
        cfg.section_digests["ingest"] = json({{"data_dir", cfg.data_dir}}).dump();
        cfg.section_digests["clean"] = j.value("cleaning", json::object()).dump();
        cfg.section_digests["featurize"] =
            json({{"weather", j.value("weather", json::object())},
                  {"features", j.value("features", json::object())},
                  {"holidays", j.value("holidays", json::object())}})
                .dump();
        cfg.section_digests["train"] =
            json({{"model", j.value("model", json::object())}, {"seed", cfg.seed}}).dump();
        cfg.section_digests["predict"] = cfg.section_digests["train"];
        cfg.section_digests["blend"] = j.value("blend", json::object()).dump();
    } catch (const json::exception& e) {
        throw ConfigError("bad config " + path + ": " + e.what());
    }
    return cfg;
}

} // namespace meterbench
