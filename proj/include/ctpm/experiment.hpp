#pragma once

#include "ctpm/baselines.hpp"
#include "ctpm/evaluate.hpp"
#include "ctpm/hawkes.hpp"
#include "ctpm/infer.hpp"
#include "ctpm/ingest.hpp"
#include "ctpm/simulate.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ctpm {

inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Synthetic corpora

/// One kind of post: its Hawkes parameters and how common it is.
struct PostType {
    std::string name;
    HawkesParams params;
    double share{1.0};
};

struct SynthConfig {
    std::size_t communities{2};
    std::size_t posts_per_community{1100};
    std::size_t authors_per_type{25};
    std::size_t type_vocabulary{30};    // words specific to one (community, type)
    std::size_t common_vocabulary{200};  // words shared by everything
    std::size_t title_words{6};
    std::size_t type_words_per_title{4};
    double param_jitter{0.1};             // log-scale spread of a and b around the preset
    double start_time{1512086400.0};      // 2017-12-01 UTC, seconds
    double mean_gap_seconds{300.0};
    SimConfig sim{};                      // T and N of generated cascades

    void validate() const;
};

/// Small, medium and large cascade presets for community `index`.
[[nodiscard]] std::vector<PostType> preset_types(std::size_t index);

/// Communities "synth0", "synth1", ... Each post belongs to a type, gets an
/// author from that type's pool and a title mixing type-specific and common
/// words, then its cascade is simulated from the jittered type parameters.
[[nodiscard]] std::vector<Corpus> synthetic_corpora(const SynthConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiment configuration

using KeyValues = std::map<std::string, std::string>;

/// Flat "key = value" text; '#' starts a comment. Throws std::invalid_argument
/// with the line number on malformed lines and duplicate keys.
[[nodiscard]] KeyValues parse_key_values(const std::string& text);
[[nodiscard]] KeyValues read_key_values(const std::filesystem::path& path);

struct ExperimentConfig {
    // Input: synthetic when posts_file is empty.
    std::filesystem::path posts_file;
    std::filesystem::path comments_file;
    std::vector<std::string> communities;  // empty: all
    SynthConfig synth{};

    std::vector<std::size_t> train_sizes{1000};
    std::size_t n_test{100};
    std::optional<double> test_start;      // seconds; default: right after the largest training set
    std::vector<double> observe_hours{0.0, 6.0};
    std::vector<Model> models{kAllModels.begin(), kAllModels.end()};
    std::uint64_t seed{1};
    unsigned jobs{1};

    FitConfig fit{};
    /// Training threads are complete, so by default they are fitted as
    /// observed up to sim.T; false uses the fitter's last-comment default.
    bool fit_train_to_horizon{true};
    SimConfig sim{};
    std::size_t top_n{kDefaultTopN};
    InferConfig infer{};
    SizeClasses size_classes{};

    /// Unknown keys are rejected.
    [[nodiscard]] static ExperimentConfig from_key_values(const KeyValues& kv);
    [[nodiscard]] KeyValues to_key_values() const;
    void validate() const;
};

// ---------------------------------------------------------------------------
// Running

struct ModelComparison {
    std::string community;
    std::size_t train_size{0};
    double observe_hours{0.0};
    std::string metric;
    std::string model;
    std::string baseline;
    std::size_t pairs{0};
    MeanCi difference;  // model error minus baseline error over shared (post, run) pairs

    [[nodiscard]] bool significantly_better() const { return pairs > 1 && difference.high < 0.0; }
};

/// Paired comparison of every model against every other on the records both
/// models predicted.
[[nodiscard]] std::vector<ModelComparison> compare_models(std::span<const PredictionRecord> records);

struct CommunityStats {
    std::string community;
    std::size_t train_posts{0};
    std::size_t test_posts{0};
    std::map<std::size_t, std::size_t> size_histogram;  // test set, nodes
    std::vector<VelocityRow> velocity;
    LifetimeCurves lifetime;
    std::size_t fit_converged{0};
    std::size_t fit_not_converged{0};
    std::size_t fit_not_enough_data{0};
    std::size_t isolated_test_posts{0};
};

struct ExperimentResult {
    EvalReport report;
    std::vector<ModelComparison> comparisons;
    std::vector<CommunityStats> stats;
};

using ProgressCallback = std::function<void(const std::string&)>;

/// Splits each community chronologically, fits the training posts, runs every
/// model on every test post for each training size, observation window and
/// run, and aggregates the errors. Deterministic for a fixed configuration.
[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressCallback& progress = {});

/// Writes records.csv, aggregate.csv, aggregate.jsonl, comparisons.csv,
/// stats.json and manifest.json into `out_dir`.
void write_experiment_outputs(const std::filesystem::path& out_dir,
                              const ExperimentConfig& cfg,
                              const ExperimentResult& result,
                              double elapsed_seconds);

}  // namespace ctpm
