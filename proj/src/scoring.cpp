#include "meterbench/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "meterbench/csv.hpp"
#include "meterbench/error.hpp"
#include "meterbench/metrics.hpp"
#include "meterbench/records.hpp"

namespace meterbench {

void ScoreReport::write(const std::string& path) const {
    std::vector<Record> recs;
    Record s;
    s.kind = "score";
    s.set("team", team);
    s.set_double("public", public_eps).set_double("private", private_eps);
    s.set_int("public_rows", static_cast<std::int64_t>(public_rows));
    s.set_int("private_rows", static_cast<std::int64_t>(private_rows));
    s.set_int("excluded_rows", static_cast<std::int64_t>(excluded_rows));
    recs.push_back(std::move(s));
    for (int m = 0; m < kNumMeterTypes; ++m) {
        const auto pub = public_by_meter.find(m);
        const auto prv = private_by_meter.find(m);
        if (pub == public_by_meter.end() && prv == private_by_meter.end()) continue;
        Record r;
        r.kind = "meter";
        r.set("name", meter_name(static_cast<MeterType>(m)));
        r.set_int("code", m);
        if (pub != public_by_meter.end()) r.set_double("public", pub->second);
        if (prv != private_by_meter.end()) r.set_double("private", prv->second);
        recs.push_back(std::move(r));
    }
    write_records(path, recs);
}

ScoreReport load_score_report(const std::string& path) {
    ScoreReport rep;
    bool found = false;
    for (const auto& r : read_records(path)) {
        if (r.kind == "score") {
            rep.team = r.get("team");
            rep.public_eps = r.get_double("public");
            rep.private_eps = r.get_double("private");
            rep.public_rows = static_cast<std::size_t>(r.get_int("public_rows"));
            rep.private_rows = static_cast<std::size_t>(r.get_int("private_rows"));
            rep.excluded_rows = static_cast<std::size_t>(r.get_int("excluded_rows"));
            found = true;
        } else if (r.kind == "meter") {
            const int code = static_cast<int>(r.get_int("code"));
            if (r.find("public")) rep.public_by_meter[code] = r.get_double("public");
            if (r.find("private")) rep.private_by_meter[code] = r.get_double("private");
        }
    }
    if (!found) throw DataError("no score record in " + path);
    return rep;
}

ScoreReport score_submission(const std::vector<double>& predictions,
                             const std::vector<double>& truth,
                             const std::vector<TestRow>& test_rows,
                             const std::vector<BuildingMeta>& buildings, const SplitSpec& split,
                             const std::string& team) {
    if (predictions.size() != test_rows.size())
        throw DataError("submission has " + format_int((std::int64_t)predictions.size()) +
                        " predictions for " + format_int((std::int64_t)test_rows.size()) +
                        " test rows");
    if (truth.size() != test_rows.size())
        throw DataError("ground truth is not aligned with the test rows");
    for (const double v : predictions)
        if (!std::isfinite(v) || v < 0.0)
            throw DataError("submission contains a negative or non-finite prediction");

    std::map<int, int> site_of;
    for (const auto& b : buildings) site_of[b.building_id] = b.site_id;

    ScoreReport rep;
    rep.team = team;
    // public / private accumulators, total and per meter code
    KahanSum pub_sum, prv_sum;
    std::size_t pub_n = 0, prv_n = 0;
    KahanSum pub_meter[kNumMeterTypes], prv_meter[kNumMeterTypes];
    std::size_t pub_meter_n[kNumMeterTypes] = {0}, prv_meter_n[kNumMeterTypes] = {0};

    for (std::size_t i = 0; i < test_rows.size(); ++i) {
        const TestRow& row = test_rows[i];
        const int year = year_of_hour(row.ts);
        const double d = std::log1p(predictions[i]) - std::log1p(truth[i]);
        const double sq = d * d;
        const int meter = static_cast<int>(row.meter);
        if (year == split.public_year) {
            pub_sum.add(sq);
            pub_meter[meter].add(sq);
            ++pub_n;
            ++pub_meter_n[meter];
        } else if (year == split.private_year) {
            const auto it = site_of.find(row.building_id);
            const int site = it == site_of.end() ? -1 : it->second;
            if (split.excluded_site_ids.count(site)) {
                ++rep.excluded_rows;
                continue;
            }
            prv_sum.add(sq);
            prv_meter[meter].add(sq);
            ++prv_n;
            ++prv_meter_n[meter];
        }
        // rows outside both years fall in neither score; load_test_rows
        // already restricts the range
    }
    if (pub_n == 0 && prv_n == 0) throw DataError("no test rows fall inside the split years");
    rep.public_rows = pub_n;
    rep.private_rows = prv_n;
    rep.public_eps = pub_n > 0 ? std::sqrt(pub_sum.value() / static_cast<double>(pub_n)) : 0.0;
    rep.private_eps = prv_n > 0 ? std::sqrt(prv_sum.value() / static_cast<double>(prv_n)) : 0.0;
    for (int m = 0; m < kNumMeterTypes; ++m) {
        if (pub_meter_n[m] > 0)
            rep.public_by_meter[m] =
                std::sqrt(pub_meter[m].value() / static_cast<double>(pub_meter_n[m]));
        if (prv_meter_n[m] > 0)
            rep.private_by_meter[m] =
                std::sqrt(prv_meter[m].value() / static_cast<double>(prv_meter_n[m]));
    }
    return rep;
}

RuleDecision enforce_submission_rules(const std::vector<SubmissionStamp>& history,
                                      const SubmissionStamp& incoming) {
    const std::int64_t day = utc_day_of_second(incoming.upload_sec);
    int today = 0;
    for (const auto& s : history)
        if (utc_day_of_second(s.upload_sec) == day) ++today;
    if (today >= 2)
        return {false, "daily submission limit reached (2 per UTC day)"};
    if (incoming.selected_final) {
        int finals = 1;
        for (const auto& s : history)
            if (s.selected_final) ++finals;
        if (finals > 2) return {false, "at most 2 final submissions may be selected"};
    }
    return {true, ""};
}

std::optional<double> final_private_score(const std::vector<SubmissionStamp>& history) {
    std::vector<const SubmissionStamp*> pool;
    for (const auto& s : history)
        if (s.selected_final) pool.push_back(&s);
    if (pool.empty()) {
        // unselected teams are judged on their last two uploads
        std::vector<const SubmissionStamp*> sorted;
        for (const auto& s : history) sorted.push_back(&s);
        std::sort(sorted.begin(), sorted.end(),
                  [](const SubmissionStamp* a, const SubmissionStamp* b) {
                      return a->upload_sec < b->upload_sec;
                  });
        const std::size_t take = std::min<std::size_t>(2, sorted.size());
        pool.assign(sorted.end() - static_cast<std::ptrdiff_t>(take), sorted.end());
    }
    std::optional<double> best;
    for (const auto* s : pool)
        if (s->private_eps && (!best || *s->private_eps < *best)) best = *s->private_eps;
    return best;
}

const char* medal_name(Medal m) {
    switch (m) {
        case Medal::none: return "-";
        case Medal::bronze: return "bronze";
        case Medal::silver: return "silver";
        case Medal::gold: return "gold";
    }
    return "?";
}

MedalCounts medal_counts(std::size_t n_teams) {
    const double n = static_cast<double>(n_teams);
    return {static_cast<std::size_t>(std::ceil(0.002 * n)),
            static_cast<std::size_t>(std::ceil(0.05 * n)),
            static_cast<std::size_t>(std::ceil(0.10 * n))};
}

std::vector<LeaderboardEntry> build_leaderboard(std::vector<TeamScore> scores) {
    if (scores.empty()) throw DataError("leaderboard needs at least one scored team");
    std::sort(scores.begin(), scores.end(), [](const TeamScore& a, const TeamScore& b) {
        if (a.private_eps != b.private_eps) return a.private_eps < b.private_eps;
        return a.team < b.team;
    });
    const MedalCounts mc = medal_counts(scores.size());
    std::vector<LeaderboardEntry> out;
    out.reserve(scores.size());
    std::size_t i = 0;
    while (i < scores.size()) {
        std::size_t j = i;
        while (j < scores.size() && scores[j].private_eps == scores[i].private_eps) ++j;
        // the whole tie group shares the rank and the best medal its span reaches
        Medal medal = Medal::none;
        if (i < mc.gold)
            medal = Medal::gold;
        else if (i < mc.silver_cum)
            medal = Medal::silver;
        else if (i < mc.bronze_cum)
            medal = Medal::bronze;
        for (std::size_t q = i; q < j; ++q)
            out.push_back({scores[q].team, scores[q].public_eps, scores[q].private_eps,
                           static_cast<int>(i + 1), medal});
        i = j;
    }
    return out;
}

std::string format_leaderboard(const std::vector<LeaderboardEntry>& entries) {
    std::string s = "rank  team                          public    private   medal\n";
    for (const auto& e : entries) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-5d %-28s %-9.5f %-9.5f %s\n", e.rank, e.team.c_str(),
                      e.public_eps, e.private_eps, medal_name(e.medal));
        s += line;
    }
    return s;
}

} // namespace meterbench
