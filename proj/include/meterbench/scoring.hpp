#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "meterbench/dataset.hpp"

namespace meterbench {

// Test rows from 2017 score publicly, 2018 privately; excluded sites are
// removed from private scoring only (the leaked-site rule).
struct SplitSpec {
    int public_year = 2017;
    int private_year = 2018;
    std::set<int> excluded_site_ids;
};

struct ScoreReport {
    std::string team;
    double public_eps = 0.0;
    double private_eps = 0.0;
    std::size_t public_rows = 0;
    std::size_t private_rows = 0;
    std::size_t excluded_rows = 0; // 2018 rows dropped by the exclusion list
    std::map<int, double> public_by_meter;  // meter code -> epsilon
    std::map<int, double> private_by_meter;

    void write(const std::string& path) const;
};

ScoreReport load_score_report(const std::string& path);

// Scores predictions against the hidden truth. All three vectors align by
// row_id with `test_rows`; building metadata resolves sites for the
// exclusion rule. Invalid submissions (length mismatch, negative or
// non-finite values) throw DataError before any score is produced.
ScoreReport score_submission(const std::vector<double>& predictions,
                             const std::vector<double>& truth,
                             const std::vector<TestRow>& test_rows,
                             const std::vector<BuildingMeta>& buildings, const SplitSpec& split,
                             const std::string& team = "");

// --- submission-rate rules and final-score selection ---

struct SubmissionStamp {
    std::int64_t upload_sec; // UTC seconds
    bool selected_final = false;
    std::optional<double> private_eps;
};

struct RuleDecision {
    bool accepted;
    std::string reason;
};

// At most two accepted submissions per UTC calendar day, and at most two
// selected finals per team. `history` holds previously accepted entries in
// upload order.
RuleDecision enforce_submission_rules(const std::vector<SubmissionStamp>& history,
                                      const SubmissionStamp& incoming);

// Best private score among the selected finals; when none were selected,
// the last two submissions stand in.
std::optional<double> final_private_score(const std::vector<SubmissionStamp>& history);

// --- leaderboard ---

struct TeamScore {
    std::string team;
    double public_eps;
    double private_eps;
};

enum class Medal { none, bronze, silver, gold };
const char* medal_name(Medal m);

struct LeaderboardEntry {
    std::string team;
    double public_eps;
    double private_eps;
    int rank;    // competition ranking: ties share, next rank skips
    Medal medal;
};

struct MedalCounts {
    std::size_t gold;        // ceil(0.002 N)
    std::size_t silver_cum;  // ceil(0.05 N)
    std::size_t bronze_cum;  // ceil(0.10 N)
};

MedalCounts medal_counts(std::size_t n_teams);

// Ascending by private score; ties at a medal boundary all take the better
// medal.
std::vector<LeaderboardEntry> build_leaderboard(std::vector<TeamScore> scores);

std::string format_leaderboard(const std::vector<LeaderboardEntry>& entries);

} // namespace meterbench
