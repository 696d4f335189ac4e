#include "ctpm/ingest.hpp"

#include "json.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace ctpm {

using nlohmann::json;

namespace {

constexpr int kFitsVersion = 1;
constexpr int kGraphVersion = 1;
constexpr const char* kFitsFormat = "ctpm.fits";
constexpr const char* kGraphFormat = "ctpm.graph";

bool is_gzip(const std::filesystem::path& path) { return path.extension() == ".gz"; }

std::string strip_kind_prefix(const std::string& id) {
    if (id.size() > 3 && id[0] == 't' && id[2] == '_' && (id[1] == '1' || id[1] == '3')) return id.substr(3);
    return id;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line) + ": ";
}

const json& field(const json& obj, const char* name, const std::string& context) {
    const auto it = obj.find(name);
    if (it == obj.end() || it->is_null()) throw IngestError(context + "missing field '" + name + "'");
    return *it;
}

std::string string_field(const json& obj, const char* name, const std::string& context) {
    const json& v = field(obj, name, context);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw IngestError(context + "field '" + name + "' must be a string");
}

double time_field(const json& obj, const char* name, const std::string& context) {
    const json& v = field(obj, name, context);
    double t;
    if (v.is_number()) {
        t = v.get<double>();
    } else if (v.is_string()) {
        try {
            std::size_t used = 0;
            const std::string s = v.get<std::string>();
            t = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw IngestError(context + "field '" + name + "' is not a number");
        }
    } else {
        throw IngestError(context + "field '" + name + "' must be numeric");
    }
    if (!std::isfinite(t)) throw IngestError(context + "field '" + name + "' is not finite");
    return t;
}

json parse_line(const std::string& line, const std::string& context) {
    try {
        json j = json::parse(line);
        if (!j.is_object()) throw IngestError(context + "record is not a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw IngestError(context + "malformed JSON: " + e.what());
    }
}

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

// JSON has no inf/nan; those are written as strings.
json encode_double(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double decode_double(const json& v, const std::string& context) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw IngestError(context + "expected a number");
}

json post_to_json(const Post& p) {
    return json{{"id", p.post_id},
                {"author", p.author},
                {"title", p.title},
                {"created_utc", p.created_at},
                {"subreddit", p.community}};
}

Post post_from_json(const json& j, const std::string& context) {
    Post p;
    p.post_id = strip_kind_prefix(string_field(j, "id", context));
    p.author = string_field(j, "author", context);
    p.title = string_field(j, "title", context);
    p.created_at = time_field(j, "created_utc", context);
    p.community = string_field(j, "subreddit", context);
    if (p.post_id.empty()) throw IngestError(context + "empty post id");
    if (p.created_at < 0.0) throw IngestError(context + "negative created_utc");
    return p;
}

json comment_to_json(const Comment& c, const std::string& post_id) {
    const std::string parent = c.parent_id == post_id ? "t3_" + c.parent_id : "t1_" + c.parent_id;
    return json{{"id", c.comment_id},
                {"parent_id", parent},
                {"link_id", "t3_" + post_id},
                {"created_utc", c.created_at}};
}

struct RawComment {
    Comment comment;
    std::string link;
};

RawComment comment_from_json(const json& j, const std::string& context) {
    RawComment rc;
    rc.comment.comment_id = strip_kind_prefix(string_field(j, "id", context));
    rc.comment.parent_id = strip_kind_prefix(string_field(j, "parent_id", context));
    rc.link = strip_kind_prefix(string_field(j, "link_id", context));
    rc.comment.created_at = time_field(j, "created_utc", context);
    if (rc.comment.comment_id.empty()) throw IngestError(context + "empty comment id");
    return rc;
}

// Keeps only comments whose ancestor chain reaches the post with
// non-decreasing timestamps; everything else is dropped and counted.
std::vector<Comment> prune_comments(const Post& post, std::vector<Comment> raw, LoadStats& stats) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!index.emplace(raw[i].comment_id, i).second) {
            throw IngestError("post " + post.post_id + ": duplicate comment id " + raw[i].comment_id);
        }
    }
    enum class State : char { kUnknown, kVisiting, kKept, kOrphan, kInverted };
    std::vector<State> state(raw.size(), State::kUnknown);
    std::vector<std::size_t> chain;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        chain.clear();
        std::size_t cur = i;
        State verdict = State::kKept;
        while (true) {
            if (state[cur] != State::kUnknown) {
                verdict = state[cur] == State::kVisiting ? State::kOrphan : state[cur];
                break;
            }
            state[cur] = State::kVisiting;
            chain.push_back(cur);
            const Comment& c = raw[cur];
            if (c.parent_id == post.post_id) {
                verdict = c.created_at >= post.created_at ? State::kKept : State::kInverted;
                break;
            }
            const auto it = index.find(c.parent_id);
            if (it == index.end()) {
                verdict = State::kOrphan;
                break;
            }
            if (c.created_at < raw[it->second].created_at) {
                verdict = State::kInverted;
                break;
            }
            cur = it->second;
        }
        // The first element of the chain that failed determines its
        // descendants' fate; a kept ancestor keeps everyone.
        for (const std::size_t k : chain) state[k] = verdict;
    }
    std::vector<Comment> kept;
    kept.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        switch (state[i]) {
            case State::kKept: kept.push_back(std::move(raw[i])); break;
            case State::kInverted: ++stats.time_inversions; break;
            default: ++stats.orphaned; break;
        }
    }
    return kept;
}

}  // namespace

struct LineReader::Impl {
    gzFile file{nullptr};
};

LineReader::LineReader(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
    // zlib reads plain files transparently as well.
    impl_->file = gzopen(path.string().c_str(), "rb");
    if (impl_->file == nullptr) throw IngestError("cannot open " + path.string());
}

LineReader::~LineReader() {
    if (impl_ && impl_->file != nullptr) gzclose(impl_->file);
}

bool LineReader::next(std::string& line) {
    line.clear();
    char buf[8192];
    bool any = false;
    while (gzgets(impl_->file, buf, sizeof buf) != nullptr) {
        any = true;
        line.append(buf);
        if (!line.empty() && line.back() == '\n') break;
    }
    if (!any) return false;
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    ++line_no_;
    return true;
}

struct LineWriter::Impl {
    gzFile gz{nullptr};
    std::ofstream plain;
};

LineWriter::LineWriter(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
    if (is_gzip(path)) {
        impl_->gz = gzopen(path.string().c_str(), "wb");
        if (impl_->gz == nullptr) throw IngestError("cannot write " + path.string());
    } else {
        impl_->plain.open(path, std::ios::binary | std::ios::trunc);
        if (!impl_->plain) throw IngestError("cannot write " + path.string());
    }
}

LineWriter::~LineWriter() {
    try {
        close();
    } catch (...) {
    }
}

void LineWriter::write(const std::string& line) {
    if (impl_->gz != nullptr) {
        if (gzwrite(impl_->gz, line.data(), static_cast<unsigned>(line.size())) != static_cast<int>(line.size()) ||
            gzputc(impl_->gz, '\n') != '\n') {
            throw IngestError("gzip write failed");
        }
    } else {
        impl_->plain << line << '\n';
        if (!impl_->plain) throw IngestError("write failed");
    }
}

void LineWriter::close() {
    if (impl_->gz != nullptr) {
        gzclose(impl_->gz);
        impl_->gz = nullptr;
    }
    if (impl_->plain.is_open()) {
        impl_->plain.close();
        if (impl_->plain.fail()) throw IngestError("close failed");
    }
}

void Corpus::normalize() {
    std::sort(posts.begin(), posts.end(), [](const CascadeTree& x, const CascadeTree& y) {
        if (x.root().created_at != y.root().created_at) return x.root().created_at < y.root().created_at;
        return x.root().post_id < y.root().post_id;
    });
    std::unordered_set<std::string_view> seen;
    for (const CascadeTree& t : posts) {
        if (!seen.insert(t.root().post_id).second) throw IngestError("duplicate post id " + t.root().post_id);
    }
}

std::map<std::string, Corpus> load_corpora(const std::filesystem::path& posts_file,
                                           const std::filesystem::path& comments_file,
                                           LoadStats* stats_out) {
    LoadStats stats;
    std::vector<Post> posts;
    std::unordered_map<std::string, std::size_t> post_index;
    {
        LineReader reader(posts_file);
        std::string line;
        while (reader.next(line)) {
            if (blank(line)) continue;
            const std::string ctx = where(posts_file, reader.line_number());
            Post p = post_from_json(parse_line(line, ctx), ctx);
            if (!post_index.emplace(p.post_id, posts.size()).second) {
                throw IngestError(ctx + "duplicate post id " + p.post_id);
            }
            posts.push_back(std::move(p));
        }
    }
    std::vector<std::vector<Comment>> grouped(posts.size());
    {
        LineReader reader(comments_file);
        std::string line;
        while (reader.next(line)) {
            if (blank(line)) continue;
            const std::string ctx = where(comments_file, reader.line_number());
            RawComment rc = comment_from_json(parse_line(line, ctx), ctx);
            const auto it = post_index.find(rc.link);
            if (it == post_index.end()) {
                ++stats.unmatched_link;
                continue;
            }
            grouped[it->second].push_back(std::move(rc.comment));
        }
    }

    std::map<std::string, Corpus> corpora;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        std::vector<Comment> kept = prune_comments(posts[i], std::move(grouped[i]), stats);
        stats.comments += kept.size();
        Corpus& c = corpora[posts[i].community];
        c.community = posts[i].community;
        c.posts.push_back(CascadeTree::build(std::move(posts[i]), std::move(kept)));
    }
    stats.posts = posts.size();
    for (auto& [name, c] : corpora) c.normalize();
    if (stats_out) *stats_out = stats;
    return corpora;
}

Corpus load_corpus(const std::filesystem::path& posts_file,
                   const std::filesystem::path& comments_file,
                   const std::optional<std::string>& community,
                   LoadStats* stats) {
    auto corpora = load_corpora(posts_file, comments_file, stats);
    if (community) {
        const auto it = corpora.find(*community);
        if (it == corpora.end()) return Corpus{*community, {}};
        return std::move(it->second);
    }
    if (corpora.empty()) return Corpus{};
    if (corpora.size() > 1) {
        std::string names;
        for (const auto& [name, c] : corpora) names += (names.empty() ? "" : ", ") + name;
        throw IngestError("dump holds several communities (" + names + "); select one");
    }
    return std::move(corpora.begin()->second);
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& posts_file, const std::filesystem::path& comments_file) {
    LineWriter posts(posts_file);
    LineWriter comments(comments_file);
    for (const CascadeTree& t : corpus.posts) {
        posts.write(post_to_json(t.root()).dump());
        for (const Comment& c : t.comments()) comments.write(comment_to_json(c, t.root().post_id).dump());
    }
    posts.close();
    comments.close();
}

std::pair<Corpus, Corpus> chronological_split(const Corpus& corpus, const SplitSpec& split) {
    if (split.n_test < 1 || split.m_train < 1) throw std::invalid_argument("split sizes must be at least 1");
    const auto& posts = corpus.posts;
    const auto first_test = static_cast<std::size_t>(
        std::lower_bound(posts.begin(), posts.end(), split.test_start,
                         [](const CascadeTree& t, double start) { return t.root().created_at < start; }) -
        posts.begin());
    const std::size_t available_test = posts.size() - first_test;
    if (available_test < split.n_test) {
        throw std::invalid_argument("test side short: " + std::to_string(available_test) + " posts at or after test_start, need " +
                                    std::to_string(split.n_test));
    }
    if (first_test < split.m_train) {
        throw std::invalid_argument("train side short: " + std::to_string(first_test) + " posts before test_start, need " +
                                    std::to_string(split.m_train));
    }
    Corpus train{corpus.community, {}};
    Corpus test{corpus.community, {}};
    const auto begin = posts.begin();
    train.posts.assign(begin + static_cast<std::ptrdiff_t>(first_test - split.m_train), begin + static_cast<std::ptrdiff_t>(first_test));
    test.posts.assign(begin + static_cast<std::ptrdiff_t>(first_test), begin + static_cast<std::ptrdiff_t>(first_test + split.n_test));
    return {std::move(train), std::move(test)};
}

void save_fits(const std::filesystem::path& path, const std::vector<FitEntry>& fits) {
    LineWriter out(path);
    out.write(json{{"format", kFitsFormat}, {"version", kFitsVersion}, {"count", fits.size()}}.dump());
    for (const FitEntry& e : fits) {
        const FitResult& f = e.fit;
        json params = json::array();
        for (const double v : f.params.to_array()) params.push_back(encode_double(v));
        out.write(json{{"post_id", e.post_id},
                       {"params", params},
                       {"g", encode_double(f.g)},
                       {"converged", f.converged},
                       {"status", to_string(f.status)},
                       {"n_events", f.n_events_used},
                       {"neg_log_lik", encode_double(f.neg_log_lik)},
                       {"iterations", f.iterations}}
                      .dump());
    }
    out.close();
}

std::vector<FitEntry> load_fits(const std::filesystem::path& path) {
    LineReader reader(path);
    std::string line;
    if (!reader.next(line)) throw IngestError(path.string() + ": empty fits file");
    {
        const std::string ctx = where(path, 1);
        const json header = parse_line(line, ctx);
        if (header.value("format", "") != kFitsFormat) throw IngestError(ctx + "not a fits file");
        if (header.value("version", -1) != kFitsVersion) throw IngestError(ctx + "unsupported fits version");
    }
    std::vector<FitEntry> fits;
    while (reader.next(line)) {
        if (blank(line)) continue;
        const std::string ctx = where(path, reader.line_number());
        const json j = parse_line(line, ctx);
        FitEntry e;
        try {
            e.post_id = string_field(j, "post_id", ctx);
            const json& params = field(j, "params", ctx);
            if (!params.is_array() || params.size() != HawkesParams::kSize) {
                throw IngestError(ctx + "params must hold 6 values");
            }
            std::array<double, HawkesParams::kSize> v{};
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = decode_double(params[i], ctx);
            e.fit.params = HawkesParams::from_array(v);
            e.fit.g = decode_double(field(j, "g", ctx), ctx);
            e.fit.converged = field(j, "converged", ctx).get<bool>();
            e.fit.status = fit_status_from_string(field(j, "status", ctx).get<std::string>());
            e.fit.n_events_used = field(j, "n_events", ctx).get<std::size_t>();
            e.fit.neg_log_lik = decode_double(field(j, "neg_log_lik", ctx), ctx);
            e.fit.iterations = field(j, "iterations", ctx).get<std::size_t>();
        } catch (const json::exception& ex) {
            throw IngestError(ctx + "field type mismatch: " + ex.what());
        } catch (const std::invalid_argument& ex) {
            throw IngestError(ctx + ex.what());
        }
        fits.push_back(std::move(e));
    }
    return fits;
}

void save_graph(const std::filesystem::path& path, const PostGraph& graph) {
    const PostGraph base = graph.detach();
    LineWriter out(path);
    out.write(json{{"format", kGraphFormat},
                   {"version", kGraphVersion},
                   {"top_n", base.top_n()},
                   {"nodes", base.node_count()},
                   {"edges", base.edge_count()}}
                  .dump());
    for (std::size_t i = 0; i < base.node_count(); ++i) {
        const GraphNode& n = base.node(i);
        out.write(json{{"type", "node"}, {"id", n.post_id}, {"author", n.author}, {"tokens", n.tokens}}.dump());
    }
    for (const Edge& e : base.edges()) {
        out.write(json{{"type", "edge"}, {"u", base.node(e.u).post_id}, {"v", base.node(e.v).post_id}, {"w", e.weight}}.dump());
    }
    out.close();
}

PostGraph load_graph(const std::filesystem::path& path, const std::vector<FitEntry>& fits) {
    std::unordered_map<std::string, const FitResult*> fit_index;
    for (const FitEntry& e : fits) fit_index[e.post_id] = &e.fit;

    LineReader reader(path);
    std::string line;
    if (!reader.next(line)) throw IngestError(path.string() + ": empty graph file");
    std::size_t top_n = kDefaultTopN;
    {
        const std::string ctx = where(path, 1);
        const json header = parse_line(line, ctx);
        if (header.value("format", "") != kGraphFormat) throw IngestError(ctx + "not a graph file");
        if (header.value("version", -1) != kGraphVersion) throw IngestError(ctx + "unsupported graph version");
        top_n = header.value("top_n", kDefaultTopN);
    }
    std::vector<GraphNode> nodes;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<Edge> edges;
    while (reader.next(line)) {
        if (blank(line)) continue;
        const std::string ctx = where(path, reader.line_number());
        const json j = parse_line(line, ctx);
        const std::string type = string_field(j, "type", ctx);
        try {
            if (type == "node") {
                GraphNode n;
                n.post_id = string_field(j, "id", ctx);
                n.author = string_field(j, "author", ctx);
                n.tokens = field(j, "tokens", ctx).get<TokenSet>();
                const auto it = fit_index.find(n.post_id);
                if (it == fit_index.end()) throw IngestError(ctx + "no fit for graph node " + n.post_id);
                n.fit = *it->second;
                if (!index.emplace(n.post_id, nodes.size()).second) throw IngestError(ctx + "duplicate node " + n.post_id);
                nodes.push_back(std::move(n));
            } else if (type == "edge") {
                const auto u = index.find(string_field(j, "u", ctx));
                const auto v = index.find(string_field(j, "v", ctx));
                if (u == index.end() || v == index.end()) throw IngestError(ctx + "edge references unknown node");
                edges.push_back({u->second, v->second, decode_double(field(j, "w", ctx), ctx)});
            } else {
                throw IngestError(ctx + "unknown record type " + type);
            }
        } catch (const json::exception& ex) {
            throw IngestError(ctx + "field type mismatch: " + ex.what());
        }
    }
    try {
        return PostGraph::from_parts(std::move(nodes), std::move(edges), top_n);
    } catch (const std::invalid_argument& ex) {
        throw IngestError(path.string() + ": " + ex.what());
    }
}

void write_trees(const std::filesystem::path& path, const std::vector<TreeRecord>& trees) {
    LineWriter out(path);
    for (const TreeRecord& r : trees) {
        json comments = json::array();
        for (const Comment& c : r.tree.comments()) comments.push_back(comment_to_json(c, r.tree.root().post_id));
        json j{{"post", post_to_json(r.tree.root())}, {"comments", std::move(comments)}, {"simulated", r.simulated}};
        if (r.simulated) {
            j["truncated"] = r.truncated;
            j["model"] = r.model;
            j["run"] = r.run;
            j["observe_hours"] = r.observe_hours;
        }
        out.write(j.dump());
    }
    out.close();
}

std::vector<TreeRecord> read_trees(const std::filesystem::path& path) {
    LineReader reader(path);
    std::string line;
    std::vector<TreeRecord> trees;
    while (reader.next(line)) {
        if (blank(line)) continue;
        const std::string ctx = where(path, reader.line_number());
        const json j = parse_line(line, ctx);
        TreeRecord r;
        try {
            Post post = post_from_json(field(j, "post", ctx), ctx);
            std::vector<Comment> comments;
            for (const json& c : field(j, "comments", ctx)) {
                RawComment rc = comment_from_json(c, ctx);
                if (rc.link != post.post_id) throw IngestError(ctx + "comment link_id does not match the post");
                comments.push_back(std::move(rc.comment));
            }
            r.tree = CascadeTree::build(std::move(post), std::move(comments));
            r.simulated = j.value("simulated", false);
            r.truncated = j.value("truncated", false);
            r.model = j.value("model", "");
            r.run = j.value("run", std::size_t{0});
            r.observe_hours = j.value("observe_hours", 0.0);
        } catch (const json::exception& ex) {
            throw IngestError(ctx + "field type mismatch: " + ex.what());
        } catch (const std::invalid_argument& ex) {
            throw IngestError(ctx + ex.what());
        }
        trees.push_back(std::move(r));
    }
    return trees;
}

}  // namespace ctpm
