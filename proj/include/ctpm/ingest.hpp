#pragma once

#include "ctpm/cascade.hpp"
#include "ctpm/hawkes.hpp"
#include "ctpm/postgraph.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ctpm {

/// Malformed input; the message carries file and line.
class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Corpus {
    std::string community;
    std::vector<CascadeTree> posts;  // ordered by (created_at, post_id)

    /// Sorts posts and checks for duplicate ids.
    void normalize();
};

struct LoadStats {
    std::size_t posts{0};
    std::size_t comments{0};
    std::size_t unmatched_link{0};   // link_id names no known post
    std::size_t orphaned{0};         // parent missing (dropped with descendants)
    std::size_t time_inversions{0};  // earlier than parent (dropped with descendants)
};

/// Reads line-delimited JSON dumps. Post records need id, author, title,
/// created_utc and subreddit; comment records need id, parent_id, link_id and
/// created_utc. Reddit "t1_"/"t3_" prefixes are stripped, extra fields are
/// ignored, and files ending in .gz are decompressed.
[[nodiscard]] std::map<std::string, Corpus> load_corpora(const std::filesystem::path& posts_file,
                                                         const std::filesystem::path& comments_file,
                                                         LoadStats* stats = nullptr);

/// Single-community variant; `community` selects one when the dump has several.
[[nodiscard]] Corpus load_corpus(const std::filesystem::path& posts_file,
                                 const std::filesystem::path& comments_file,
                                 const std::optional<std::string>& community = std::nullopt,
                                 LoadStats* stats = nullptr);

/// Writes the dump format read by load_corpora.
void write_corpus(const Corpus& corpus,
                  const std::filesystem::path& posts_file,
                  const std::filesystem::path& comments_file);

struct SplitSpec {
    std::size_t n_test{1};
    std::size_t m_train{1};
    double test_start{0.0};  // absolute seconds
};

/// Test set: the first n_test posts created at or after test_start. Training
/// set: the m_train posts immediately before the first test post.
[[nodiscard]] std::pair<Corpus, Corpus> chronological_split(const Corpus& corpus, const SplitSpec& split);

struct FitEntry {
    std::string post_id;
    FitResult fit;

    friend bool operator==(const FitEntry&, const FitEntry&) = default;
};

void save_fits(const std::filesystem::path& path, const std::vector<FitEntry>& fits);
[[nodiscard]] std::vector<FitEntry> load_fits(const std::filesystem::path& path);

/// Persists the training part of a graph (the unknown post, if any, is not
/// written). Fits are stored separately and re-attached by load_graph.
void save_graph(const std::filesystem::path& path, const PostGraph& graph);
[[nodiscard]] PostGraph load_graph(const std::filesystem::path& path, const std::vector<FitEntry>& fits);

/// One cascade per line, real or simulated.
struct TreeRecord {
    CascadeTree tree;
    bool simulated{false};
    bool truncated{false};
    std::string model;
    std::size_t run{0};
    double observe_hours{0.0};

    friend bool operator==(const TreeRecord&, const TreeRecord&) = default;
};

void write_trees(const std::filesystem::path& path, const std::vector<TreeRecord>& trees);
[[nodiscard]] std::vector<TreeRecord> read_trees(const std::filesystem::path& path);

/// Line-oriented text IO with transparent gzip for *.gz paths.
class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path);
    ~LineReader();
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    bool next(std::string& line);
    [[nodiscard]] std::size_t line_number() const noexcept { return line_no_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::size_t line_no_{0};
};

class LineWriter {
public:
    explicit LineWriter(const std::filesystem::path& path);
    ~LineWriter();
    LineWriter(const LineWriter&) = delete;
    LineWriter& operator=(const LineWriter&) = delete;

    void write(const std::string& line);
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ctpm
