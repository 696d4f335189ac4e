#include "ctpm/evaluate.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace ctpm {

std::uint64_t wiener_index(const CascadeTree& t) {
    const std::size_t m = t.comment_count();
    const std::uint64_t total = m + 1;
    std::vector<std::uint64_t> subtree(m + 1, 1);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& comments = t.comments();
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return comments[x].depth > comments[y].depth; });
    const auto& parent = t.parent_indices();
    std::uint64_t w = 0;
    for (const std::size_t i : order) {
        const std::uint64_t s = subtree[i + 1];
        w += s * (total - s);
        subtree[static_cast<std::size_t>(parent[i] + 1)] += s;
    }
    return w;
}

std::optional<double> structural_virality(const CascadeTree& t) {
    const std::uint64_t n = tree_size(t);
    if (n < 2) return std::nullopt;
    return static_cast<double>(2 * wiener_index(t)) / static_cast<double>(n * (n - 1));
}

TreeMetrics tree_metrics(const CascadeTree& t) {
    return {static_cast<double>(tree_size(t)), static_cast<double>(tree_depth(t)),
            static_cast<double>(tree_breadth(t)), structural_virality(t)};
}

MreResult mre_detailed(std::span<const TruthPredictions> items) {
    MreResult r;
    double sum = 0.0;
    for (const TruthPredictions& item : items) {
        if (item.truth == 0.0 || !std::isfinite(item.truth)) {
            ++r.excluded;
            continue;
        }
        for (const double p : item.predictions) {
            sum += std::abs((item.truth - p) / item.truth);
            ++r.pairs;
        }
    }
    r.value = r.pairs == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(r.pairs);
    return r;
}

double mre(std::span<const TruthPredictions> items) { return mre_detailed(items).value; }

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: both samples must be non-empty");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

std::vector<VelocityRow> observation_velocity_table(std::span<const CascadeTree> posts,
                                                    std::span<const std::size_t> thresholds,
                                                    std::span<const double> observe_hours) {
    std::vector<VelocityRow> rows;
    for (const double hours : observe_hours) {
        const double limit = hours * 60.0;
        std::vector<std::size_t> observed(posts.size());
        for (std::size_t p = 0; p < posts.size(); ++p) {
            const auto& rel = posts[p].relative_times();
            observed[p] = static_cast<std::size_t>(std::upper_bound(rel.begin(), rel.end(), limit) - rel.begin());
        }
        for (const std::size_t k : thresholds) {
            VelocityRow row{k, hours, 0, 0.0, 0, 0.0};
            double sum_hi = 0.0, sum_lo = 0.0;
            for (std::size_t p = 0; p < posts.size(); ++p) {
                const auto final_size = static_cast<double>(posts[p].comment_count());
                if (observed[p] >= k) {
                    ++row.posts_at_least;
                    sum_hi += final_size;
                } else {
                    ++row.posts_below;
                    sum_lo += final_size;
                }
            }
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.mean_final_at_least = row.posts_at_least ? sum_hi / static_cast<double>(row.posts_at_least) : nan;
            row.mean_final_below = row.posts_below ? sum_lo / static_cast<double>(row.posts_below) : nan;
            rows.push_back(row);
        }
    }
    return rows;
}

std::map<std::size_t, std::size_t> size_distribution(std::span<const CascadeTree> posts) {
    std::map<std::size_t, std::size_t> hist;
    for (const CascadeTree& t : posts) ++hist[tree_size(t)];
    return hist;
}

LifetimeCurves lifetime_curves(std::span<const CascadeTree> posts,
                               std::span<const double> lifetime_fractions,
                               std::span<const double> hours,
                               std::size_t min_comments) {
    LifetimeCurves c;
    c.lifetime_fractions.assign(lifetime_fractions.begin(), lifetime_fractions.end());
    c.hours.assign(hours.begin(), hours.end());
    c.pct_by_lifetime.assign(lifetime_fractions.size(), 0.0);
    c.pct_by_hours.assign(hours.size(), 0.0);
    const auto share_by = [](const std::vector<double>& rel, double limit) {
        const auto seen = std::upper_bound(rel.begin(), rel.end(), limit) - rel.begin();
        return 100.0 * static_cast<double>(seen) / static_cast<double>(rel.size());
    };
    for (const CascadeTree& t : posts) {
        if (t.comment_count() < min_comments || t.comment_count() == 0) continue;
        ++c.posts_used;
        const auto& rel = t.relative_times();
        const double lifetime = t.last_time();
        for (std::size_t i = 0; i < lifetime_fractions.size(); ++i) {
            c.pct_by_lifetime[i] += share_by(rel, lifetime_fractions[i] * lifetime);
        }
        for (std::size_t i = 0; i < hours.size(); ++i) c.pct_by_hours[i] += share_by(rel, hours[i] * 60.0);
    }
    if (c.posts_used > 0) {
        const auto n = static_cast<double>(c.posts_used);
        for (double& v : c.pct_by_lifetime) v /= n;
        for (double& v : c.pct_by_hours) v /= n;
    }
    return c;
}

std::string to_string(Metric m) {
    switch (m) {
        case Metric::kSize: return "size";
        case Metric::kDepth: return "depth";
        case Metric::kBreadth: return "breadth";
        case Metric::kVirality: return "virality";
    }
    return "unknown";
}

std::optional<double> relative_error(const PredictionRecord& r, Metric m) {
    if (!r.has_prediction) return std::nullopt;
    double truth = 0.0, pred = 0.0;
    switch (m) {
        case Metric::kSize:
            truth = r.truth.size;
            pred = r.predicted.size;
            break;
        case Metric::kDepth:
            truth = r.truth.depth;
            pred = r.predicted.depth;
            break;
        case Metric::kBreadth:
            truth = r.truth.breadth;
            pred = r.predicted.breadth;
            break;
        case Metric::kVirality:
            if (!r.truth.virality || !r.predicted.virality) return std::nullopt;
            truth = *r.truth.virality;
            pred = *r.predicted.virality;
            break;
    }
    if (truth == 0.0) return std::nullopt;
    return std::abs((truth - pred) / truth);
}

std::string SizeClasses::label_for(std::size_t comments) const {
    for (std::size_t i = edges.size(); i-- > 0;) {
        if (comments >= edges[i]) {
            if (i + 1 < edges.size()) {
                return "[" + std::to_string(edges[i]) + "," + std::to_string(edges[i + 1]) + ")";
            }
            return "[" + std::to_string(edges[i]) + ",inf)";
        }
    }
    return "below";
}

std::vector<std::string> SizeClasses::labels() const {
    std::vector<std::string> out;
    for (const std::size_t e : edges) out.push_back(label_for(e));
    return out;
}

MeanCi mean_ci95(std::span<const double> values) {
    if (values.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan};
    }
    const auto n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) return {mean, mean, mean};
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    const double half = 1.959963984540054 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return {mean, mean - half, mean + half};
}

EvalReport aggregate(std::vector<PredictionRecord> records, const SizeClasses& classes) {
    using GroupKey = std::tuple<std::string, std::size_t, std::string, double>;
    std::map<GroupKey, std::vector<const PredictionRecord*>> groups;
    for (const PredictionRecord& r : records) {
        groups[{r.community, r.train_size, r.model, r.observe_hours}].push_back(&r);
    }

    EvalReport report;
    std::vector<std::string> class_labels{"all"};
    for (const std::string& l : classes.labels()) class_labels.push_back(l);

    for (const auto& [key, members] : groups) {
        const auto& [community, train_size, model, observe] = key;
        for (const std::string& label : class_labels) {
            std::vector<const PredictionRecord*> in_class;
            for (const PredictionRecord* r : members) {
                if (label == "all" || classes.label_for(r->truth_comments) == label) in_class.push_back(r);
            }
            if (in_class.empty()) continue;
            std::size_t no_prediction = 0;
            for (const PredictionRecord* r : in_class) no_prediction += r->has_prediction ? 0 : 1;

            const auto emit = [&](const std::string& metric, const std::vector<double>& values, std::size_t excluded) {
                const MeanCi ci = mean_ci95(values);
                report.aggregates.push_back({community, train_size, model, observe, metric, label, values.size(), ci.mean,
                                             ci.low, ci.high, excluded, no_prediction});
            };
            for (const Metric m : kAllMetrics) {
                std::vector<double> errors;
                std::size_t excluded = 0;
                for (const PredictionRecord* r : in_class) {
                    if (!r->has_prediction) continue;
                    if (const auto e = relative_error(*r, m)) {
                        errors.push_back(*e);
                    } else {
                        ++excluded;
                    }
                }
                emit(to_string(m), errors, excluded);
            }
            std::vector<double> ks;
            std::size_t ks_excluded = 0;
            for (const PredictionRecord* r : in_class) {
                if (!r->has_prediction) continue;
                if (r->ks) {
                    ks.push_back(*r->ks);
                } else {
                    ++ks_excluded;
                }
            }
            emit("ks", ks, ks_excluded);
        }
    }
    report.records = std::move(records);
    return report;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

}  // namespace

void write_records_csv(std::ostream& out, std::span<const PredictionRecord> records) {
    out << "community,train_size,post_id,model,observe_hours,run,has_prediction,truth_comments,"
           "truth_size,truth_depth,truth_breadth,truth_virality,"
           "pred_size,pred_depth,pred_breadth,pred_virality,ks\n";
    for (const PredictionRecord& r : records) {
        out << r.community << ',' << r.train_size << ',' << r.post_id << ',' << r.model << ','
            << format_number(r.observe_hours) << ',' << r.run << ',' << (r.has_prediction ? 1 : 0) << ','
            << r.truth_comments << ',' << format_number(r.truth.size) << ',' << format_number(r.truth.depth) << ','
            << format_number(r.truth.breadth) << ',' << opt_number(r.truth.virality) << ',';
        if (r.has_prediction) {
            out << format_number(r.predicted.size) << ',' << format_number(r.predicted.depth) << ','
                << format_number(r.predicted.breadth) << ',' << opt_number(r.predicted.virality) << ','
                << opt_number(r.ks);
        } else {
            out << ",,,,";
        }
        out << '\n';
    }
}

void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows) {
    out << "community,train_size,model,observe_hours,metric,size_class,n,mean,ci_low,ci_high,excluded,no_prediction\n";
    for (const AggregateRow& r : rows) {
        out << r.community << ',' << r.train_size << ',' << r.model << ',' << format_number(r.observe_hours) << ','
            << r.metric << ',' << '"' << r.size_class << '"' << ',' << r.n << ',' << format_number(r.mean) << ','
            << format_number(r.ci_low) << ',' << format_number(r.ci_high) << ',' << r.excluded << ','
            << r.no_prediction << '\n';
    }
}

void write_aggregate_jsonl(std::ostream& out, std::span<const AggregateRow> rows) {
    for (const AggregateRow& r : rows) {
        const auto num = [](double v) -> nlohmann::json {
            if (std::isfinite(v)) return v;
            return nullptr;
        };
        out << nlohmann::json{{"schema_version", kCsvSchemaVersion},
                              {"community", r.community},
                              {"train_size", r.train_size},
                              {"model", r.model},
                              {"observe_hours", r.observe_hours},
                              {"metric", r.metric},
                              {"size_class", r.size_class},
                              {"n", r.n},
                              {"mean", num(r.mean)},
                              {"ci_low", num(r.ci_low)},
                              {"ci_high", num(r.ci_high)},
                              {"excluded", r.excluded},
                              {"no_prediction", r.no_prediction}}
                   .dump()
            << '\n';
    }
}

}  // namespace ctpm
