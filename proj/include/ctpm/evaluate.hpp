#pragma once

#include "ctpm/cascade.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace ctpm {

/// Sum of path lengths over unordered node pairs (Wiener index).
[[nodiscard]] std::uint64_t wiener_index(const CascadeTree& t);

/// Mean distance over ordered pairs of distinct nodes; undefined (nullopt)
/// for a post without comments.
[[nodiscard]] std::optional<double> structural_virality(const CascadeTree& t);

struct TreeMetrics {
    double size{1.0};
    double depth{0.0};
    double breadth{1.0};
    std::optional<double> virality;

    friend bool operator==(const TreeMetrics&, const TreeMetrics&) = default;
};

[[nodiscard]] TreeMetrics tree_metrics(const CascadeTree& t);

struct TruthPredictions {
    double truth{0.0};
    std::vector<double> predictions;
};

struct MreResult {
    double value{0.0};        // NaN when nothing was usable
    std::size_t pairs{0};
    std::size_t excluded{0};  // items dropped for a zero truth
};

/// Mean of |truth - prediction| / truth over every (item, prediction) pair.
[[nodiscard]] MreResult mre_detailed(std::span<const TruthPredictions> items);
[[nodiscard]] double mre(std::span<const TruthPredictions> items);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|. Throws on empty input.
[[nodiscard]] double ks_statistic(std::vector<double> a, std::vector<double> b);

struct VelocityRow {
    std::size_t threshold{0};
    double observe_hours{0.0};
    std::size_t posts_at_least{0};
    double mean_final_at_least{0.0};  // NaN when no posts qualify
    std::size_t posts_below{0};
    double mean_final_below{0.0};
};

/// Mean final comment count of posts with at least / fewer than `threshold`
/// comments within each observation time.
[[nodiscard]] std::vector<VelocityRow> observation_velocity_table(std::span<const CascadeTree> posts,
                                                                  std::span<const std::size_t> thresholds,
                                                                  std::span<const double> observe_hours);

/// Histogram of cascade sizes in nodes (root included).
[[nodiscard]] std::map<std::size_t, std::size_t> size_distribution(std::span<const CascadeTree> posts);

struct LifetimeCurves {
    std::vector<double> lifetime_fractions;  // x-axis, fraction of each thread's lifetime
    std::vector<double> pct_by_lifetime;     // mean % of comments seen by then
    std::vector<double> hours;               // x-axis, absolute hours
    std::vector<double> pct_by_hours;
    std::size_t posts_used{0};
};

/// Mean share of a thread's comments observed over its lifetime and over time,
/// for threads with at least `min_comments` comments.
[[nodiscard]] LifetimeCurves lifetime_curves(std::span<const CascadeTree> posts,
                                             std::span<const double> lifetime_fractions,
                                             std::span<const double> hours,
                                             std::size_t min_comments = 10);

/// One simulated cascade compared with its ground truth.
struct PredictionRecord {
    std::string community;
    std::string post_id;
    std::string model;
    std::size_t train_size{0};
    double observe_hours{0.0};
    std::size_t run{0};
    bool has_prediction{false};  // false: the model produced no prediction
    std::size_t truth_comments{0};
    TreeMetrics truth;
    TreeMetrics predicted;
    std::optional<double> ks;    // only for truths with >= 10 comments
};

enum class Metric { kSize, kDepth, kBreadth, kVirality };
[[nodiscard]] std::string to_string(Metric m);
inline constexpr Metric kAllMetrics[] = {Metric::kSize, Metric::kDepth, Metric::kBreadth, Metric::kVirality};

/// Relative error of one record for one metric; nullopt when excluded
/// (no prediction, zero depth truth, undefined virality on either side).
[[nodiscard]] std::optional<double> relative_error(const PredictionRecord& r, Metric m);

struct SizeClasses {
    std::vector<std::size_t> edges{0, 5, 50, 100};  // lower edges in comments; last class is open

    [[nodiscard]] std::string label_for(std::size_t comments) const;
    [[nodiscard]] std::vector<std::string> labels() const;
};

struct AggregateRow {
    std::string community;
    std::size_t train_size{0};
    std::string model;
    double observe_hours{0.0};
    std::string metric;      // size, depth, breadth, virality, ks
    std::string size_class;  // "all" or "[lo,hi)"
    std::size_t n{0};
    double mean{0.0};
    double ci_low{0.0};
    double ci_high{0.0};
    std::size_t excluded{0};
    std::size_t no_prediction{0};
};

struct EvalReport {
    std::vector<PredictionRecord> records;
    std::vector<AggregateRow> aggregates;
};

struct MeanCi {
    double mean{0.0};
    double low{0.0};
    double high{0.0};
};

/// Mean with a 95% normal-approximation confidence interval.
[[nodiscard]] MeanCi mean_ci95(std::span<const double> values);

/// Groups records by (community, train size, model, observe hours) and by
/// size class, and computes MRE and mean KS with confidence intervals.
[[nodiscard]] EvalReport aggregate(std::vector<PredictionRecord> records, const SizeClasses& classes = {});

inline constexpr int kCsvSchemaVersion = 1;

void write_records_csv(std::ostream& out, std::span<const PredictionRecord> records);
void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows);
void write_aggregate_jsonl(std::ostream& out, std::span<const AggregateRow> rows);

/// Fixed-format number used in every emitted table.
[[nodiscard]] std::string format_number(double v);

}  // namespace ctpm
