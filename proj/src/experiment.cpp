#include "ctpm/experiment.hpp"

#include "ctpm/parallel.hpp"
#include "ctpm/postgraph.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace ctpm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Synthetic corpora

void SynthConfig::validate() const {
    if (communities < 1) throw std::invalid_argument("synth: communities must be at least 1");
    if (posts_per_community < 1) throw std::invalid_argument("synth: posts_per_community must be at least 1");
    if (authors_per_type < 1) throw std::invalid_argument("synth: authors_per_type must be at least 1");
    if (type_vocabulary < 1 || common_vocabulary < 1) throw std::invalid_argument("synth: vocabularies must be non-empty");
    if (type_words_per_title > title_words) {
        throw std::invalid_argument("synth: type_words_per_title must not exceed title_words");
    }
    if (!(param_jitter >= 0.0)) throw std::invalid_argument("synth: param_jitter must be non-negative");
    if (!(mean_gap_seconds > 0.0)) throw std::invalid_argument("synth: mean_gap_seconds must be positive");
    sim.validate();
}

std::vector<PostType> preset_types(std::size_t index) {
    std::vector<PostType> types{
        {"small", {2.0, 90.0, 1.3, 2.5, 1.0, 0.25}, 0.50},
        {"medium", {12.0, 180.0, 1.1, 2.8, 1.0, 0.50}, 0.35},
        {"large", {60.0, 240.0, 0.9, 3.0, 1.1, 0.70}, 0.15},
    };
    // Odd communities are slower and somewhat smaller.
    if (index % 2 == 1) {
        for (PostType& t : types) {
            t.params.a *= 0.8;
            t.params.b *= 1.5;
            t.params.mu += 0.3;
        }
    }
    return types;
}

namespace {

std::string padded(std::size_t value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, value);
    return buf;
}

}  // namespace

std::vector<Corpus> synthetic_corpora(const SynthConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::vector<Corpus> out;
    for (std::size_t c = 0; c < cfg.communities; ++c) {
        const std::string community = "synth" + std::to_string(c);
        const std::vector<PostType> types = preset_types(c);
        std::vector<double> shares;
        for (const PostType& t : types) shares.push_back(t.share);

        Rng rng(derive_seed(seed, community, 0));
        std::discrete_distribution<std::size_t> pick_type(shares.begin(), shares.end());
        std::uniform_int_distribution<std::size_t> pick_author(0, cfg.authors_per_type - 1);
        std::uniform_int_distribution<std::size_t> pick_type_word(0, cfg.type_vocabulary - 1);
        std::uniform_int_distribution<std::size_t> pick_common_word(0, cfg.common_vocabulary - 1);
        std::exponential_distribution<double> gap(1.0 / cfg.mean_gap_seconds);
        std::normal_distribution<double> jitter(0.0, cfg.param_jitter);

        Corpus corpus{community, {}};
        double clock = cfg.start_time;
        for (std::size_t i = 0; i < cfg.posts_per_community; ++i) {
            clock += gap(rng);
            const PostType& type = types[pick_type(rng)];
            const std::string tag = "c" + std::to_string(c) + type.name;

            Post post;
            post.post_id = "s" + std::to_string(c) + "_" + padded(i, 6);
            post.author = tag + "_u" + std::to_string(pick_author(rng));
            post.created_at = std::round(clock);
            post.community = community;
            for (std::size_t w = 0; w < cfg.title_words; ++w) {
                if (!post.title.empty()) post.title += ' ';
                post.title += w < cfg.type_words_per_title ? tag + "w" + std::to_string(pick_type_word(rng))
                                                           : "w" + std::to_string(pick_common_word(rng));
            }

            HawkesParams params = type.params;
            params.a *= std::exp(jitter(rng));
            params.b *= std::exp(jitter(rng));

            SimConfig sim = cfg.sim;
            sim.seed = derive_seed(seed, post.post_id, 0);
            const SimulationResult generated = simulate_tree(params, sim, CascadeTree::build(post, {}));

            // Give comments corpus-wide unique ids.
            std::unordered_map<std::string, std::string> rename{{post.post_id, post.post_id}};
            std::vector<Comment> comments;
            comments.reserve(generated.tree.comment_count());
            for (const Comment& cm : generated.tree.comments()) {
                rename.emplace(cm.comment_id, post.post_id + "_" + cm.comment_id.substr(3));
            }
            for (const Comment& cm : generated.tree.comments()) {
                comments.push_back({rename.at(cm.comment_id), rename.at(cm.parent_id), cm.created_at, 0});
            }
            corpus.posts.push_back(CascadeTree::build(post, std::move(comments)));
        }
        corpus.normalize();
        out.push_back(std::move(corpus));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
std::string join(const std::vector<T>& items, auto&& format) {
    std::string out;
    for (const T& item : items) {
        if (!out.empty()) out += ',';
        out += format(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + value + "'");
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        if (!value.empty() && value[0] != '-') {
            const unsigned long long v = std::stoull(value, &used);
            if (used == value.size()) return v;
        }
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("config: '" + key + "' expects a non-negative integer, got '" + value + "'");
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw std::invalid_argument("config: '" + key + "' expects true or false, got '" + value + "'");
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::stringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        if (!kv.emplace(key, trim(line.substr(eq + 1))).second) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_key_values(buffer.str());
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValues& kv) {
    ExperimentConfig c;
    for (const auto& [key, value] : kv) {
        const auto num = [&] { return to_double(key, value); };
        const auto count = [&] { return static_cast<std::size_t>(to_unsigned(key, value)); };
        if (key == "posts_file") {
            c.posts_file = value;
        } else if (key == "comments_file") {
            c.comments_file = value;
        } else if (key == "communities") {
            c.communities = split_list(value);
        } else if (key == "synth.communities") {
            c.synth.communities = count();
        } else if (key == "synth.posts_per_community") {
            c.synth.posts_per_community = count();
        } else if (key == "synth.authors_per_type") {
            c.synth.authors_per_type = count();
        } else if (key == "synth.type_vocabulary") {
            c.synth.type_vocabulary = count();
        } else if (key == "synth.common_vocabulary") {
            c.synth.common_vocabulary = count();
        } else if (key == "synth.title_words") {
            c.synth.title_words = count();
        } else if (key == "synth.type_words_per_title") {
            c.synth.type_words_per_title = count();
        } else if (key == "synth.param_jitter") {
            c.synth.param_jitter = num();
        } else if (key == "synth.start_time") {
            c.synth.start_time = num();
        } else if (key == "synth.mean_gap_seconds") {
            c.synth.mean_gap_seconds = num();
        } else if (key == "train_sizes") {
            c.train_sizes.clear();
            for (const std::string& item : split_list(value)) {
                c.train_sizes.push_back(static_cast<std::size_t>(to_unsigned(key, item)));
            }
        } else if (key == "n_test") {
            c.n_test = count();
        } else if (key == "test_start") {
            if (value.empty()) {
                c.test_start.reset();
            } else {
                c.test_start = num();
            }
        } else if (key == "observe_hours") {
            c.observe_hours.clear();
            for (const std::string& item : split_list(value)) c.observe_hours.push_back(to_double(key, item));
        } else if (key == "models") {
            c.models.clear();
            for (const std::string& item : split_list(value)) c.models.push_back(model_from_string(item));
        } else if (key == "seed") {
            c.seed = to_unsigned(key, value);
        } else if (key == "jobs") {
            c.jobs = static_cast<unsigned>(to_unsigned(key, value));
        } else if (key == "fit.min_comments") {
            c.fit.min_comments = count();
        } else if (key == "fit.lower_bounds" || key == "fit.upper_bounds") {
            const std::vector<std::string> items = split_list(value);
            if (items.size() != HawkesParams::kSize) {
                throw std::invalid_argument("config: '" + key + "' expects 6 comma-separated numbers");
            }
            auto& target = key == "fit.lower_bounds" ? c.fit.lower_bounds : c.fit.upper_bounds;
            for (std::size_t d = 0; d < items.size(); ++d) target[d] = to_double(key, items[d]);
        } else if (key == "fit.train_to_horizon") {
            c.fit_train_to_horizon = to_bool(key, value);
        } else if (key == "fit.max_iterations") {
            c.fit.max_iterations = count();
        } else if (key == "sim.T") {
            c.sim.T = num();
        } else if (key == "sim.N") {
            c.sim.N = count();
        } else if (key == "sim.runs") {
            c.sim.runs = count();
        } else if (key == "graph.top_n") {
            c.top_n = count();
        } else if (key == "infer.r_base") {
            c.infer.r_base = num();
        } else if (key == "infer.epochs") {
            c.infer.epochs = count();
        } else if (key == "infer.walks_per_node") {
            c.infer.walks_per_node = count();
        } else if (key == "infer.walk_length") {
            c.infer.walk_length = count();
        } else if (key == "infer.window") {
            c.infer.window = count();
        } else if (key == "infer.regenerate_walks") {
            c.infer.regenerate_walks = to_bool(key, value);
        } else if (key == "eval.size_classes") {
            c.size_classes.edges.clear();
            for (const std::string& item : split_list(value)) {
                c.size_classes.edges.push_back(static_cast<std::size_t>(to_unsigned(key, item)));
            }
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    c.synth.sim.T = c.sim.T;
    c.synth.sim.N = c.sim.N;
    return c;
}

KeyValues ExperimentConfig::to_key_values() const {
    const auto size_str = [](std::size_t v) { return std::to_string(v); };
    KeyValues kv{
        {"posts_file", posts_file.string()},
        {"comments_file", comments_file.string()},
        {"communities", join(communities, [](const std::string& s) { return s; })},
        {"synth.communities", size_str(synth.communities)},
        {"synth.posts_per_community", size_str(synth.posts_per_community)},
        {"synth.authors_per_type", size_str(synth.authors_per_type)},
        {"synth.type_vocabulary", size_str(synth.type_vocabulary)},
        {"synth.common_vocabulary", size_str(synth.common_vocabulary)},
        {"synth.title_words", size_str(synth.title_words)},
        {"synth.type_words_per_title", size_str(synth.type_words_per_title)},
        {"synth.param_jitter", exact(synth.param_jitter)},
        {"synth.start_time", exact(synth.start_time)},
        {"synth.mean_gap_seconds", exact(synth.mean_gap_seconds)},
        {"train_sizes", join(train_sizes, size_str)},
        {"n_test", size_str(n_test)},
        {"test_start", test_start ? exact(*test_start) : ""},
        {"observe_hours", join(observe_hours, exact)},
        {"models", join(models, [](Model m) { return to_string(m); })},
        {"seed", std::to_string(seed)},
        {"jobs", std::to_string(jobs)},
        {"fit.min_comments", size_str(fit.min_comments)},
        {"fit.max_iterations", size_str(fit.max_iterations)},
        {"fit.lower_bounds", join(std::vector<double>(fit.lower_bounds.begin(), fit.lower_bounds.end()), exact)},
        {"fit.upper_bounds", join(std::vector<double>(fit.upper_bounds.begin(), fit.upper_bounds.end()), exact)},
        {"fit.train_to_horizon", fit_train_to_horizon ? "true" : "false"},
        {"sim.T", exact(sim.T)},
        {"sim.N", size_str(sim.N)},
        {"sim.runs", size_str(sim.runs)},
        {"graph.top_n", size_str(top_n)},
        {"infer.r_base", exact(infer.r_base)},
        {"infer.epochs", size_str(infer.epochs)},
        {"infer.walks_per_node", size_str(infer.walks_per_node)},
        {"infer.walk_length", size_str(infer.walk_length)},
        {"infer.window", size_str(infer.window)},
        {"infer.regenerate_walks", infer.regenerate_walks ? "true" : "false"},
        {"eval.size_classes", join(size_classes.edges, size_str)},
    };
    return kv;
}

void ExperimentConfig::validate() const {
    if (posts_file.empty() != comments_file.empty()) {
        throw std::invalid_argument("config: posts_file and comments_file must be given together");
    }
    if (posts_file.empty()) synth.validate();
    if (train_sizes.empty()) throw std::invalid_argument("config: train_sizes is empty");
    for (const std::size_t m : train_sizes) {
        if (m < 1) throw std::invalid_argument("config: train sizes must be at least 1");
    }
    if (n_test < 1) throw std::invalid_argument("config: n_test must be at least 1");
    if (observe_hours.empty()) throw std::invalid_argument("config: observe_hours is empty");
    for (const double h : observe_hours) {
        if (!(h >= 0.0) || !(h * 60.0 < sim.T)) {
            throw std::invalid_argument("config: observe_hours must be non-negative and before sim.T");
        }
    }
    if (models.empty()) throw std::invalid_argument("config: models is empty");
    if (size_classes.edges.empty() || !std::is_sorted(size_classes.edges.begin(), size_classes.edges.end())) {
        throw std::invalid_argument("config: eval.size_classes must be non-empty and ascending");
    }
    if (top_n < 1) throw std::invalid_argument("config: graph.top_n must be at least 1");
    if (infer.walks_per_node > top_n) throw std::invalid_argument("config: infer.walks_per_node must not exceed graph.top_n");
    if (!(infer.r_base > 0.0) || infer.epochs < 1 || infer.walk_length < 1) {
        throw std::invalid_argument("config: infer.r_base, infer.epochs and infer.walk_length must be positive");
    }
    fit.validate();
    sim.validate();
}

// ---------------------------------------------------------------------------
// Running

namespace {

std::vector<double> comment_times(const CascadeTree& t) { return t.relative_times(); }

std::optional<double> ks_against(const CascadeTree& truth, const CascadeTree& predicted) {
    constexpr std::size_t kMinCommentsForKs = 10;
    if (truth.comment_count() < kMinCommentsForKs || predicted.comment_count() == 0) return std::nullopt;
    return ks_statistic(comment_times(truth), comment_times(predicted));
}

struct TrainingSet {
    std::size_t size{0};
    std::span<const CascadeTree> posts;
    std::vector<FitResult> fits;
    std::optional<PostGraph> graph;
};

std::vector<PredictionRecord> predict_post(const ExperimentConfig& cfg,
                                           const std::string& community,
                                           const TrainingSet& train,
                                           const CascadeTree& truth,
                                           bool& isolated) {
    std::vector<PredictionRecord> out;
    const std::string& post_id = truth.root().post_id;
    const TreeMetrics truth_metrics = tree_metrics(truth);
    const bool wants_ctpm = std::find(cfg.models.begin(), cfg.models.end(), Model::kCtpm) != cfg.models.end();

    HawkesParams inferred = kDefaultEmbedding;
    if (wants_ctpm) {
        const PostGraph g_star = attach_post(*train.graph, truth.root(), cfg.top_n);
        InferConfig ic = cfg.infer;
        ic.lower_bounds = cfg.fit.lower_bounds;
        ic.upper_bounds = cfg.fit.upper_bounds;
        ic.seed = derive_seed(cfg.seed, post_id + "#infer", train.size);
        const InferResult r = run_inference(g_star, ic);
        inferred = r.params;
        isolated = r.isolated;
    }
    const HawkesParams averaged = average_params(train.fits);

    for (const double hours : cfg.observe_hours) {
        const CascadeTree observed = truncate_observed(truth, hours);
        const double until = hours * 60.0;
        FitConfig window_fit = cfg.fit;
        if (hours > 0.0) window_fit.time_horizon = until;

        HawkesParams ctpm_params = inferred;
        if (wants_ctpm && observed.comment_count() > 0) ctpm_params = refit_partial(observed, inferred, window_fit).params;
        std::optional<FitResult> observed_fit;
        if (hours > 0.0) observed_fit = fit_observed(observed, window_fit);

        for (std::size_t run = 0; run < cfg.sim.runs; ++run) {
            SimConfig sc = cfg.sim;
            sc.seed = derive_seed(cfg.seed, post_id + "@" + exact(hours) + "/" + std::to_string(train.size), run);
            for (const Model model : cfg.models) {
                PredictionRecord rec;
                rec.community = community;
                rec.post_id = post_id;
                rec.model = to_string(model);
                rec.train_size = train.size;
                rec.observe_hours = hours;
                rec.run = run;
                rec.truth_comments = truth.comment_count();
                rec.truth = truth_metrics;

                std::optional<CascadeTree> predicted;
                switch (model) {
                    case Model::kCtpm:
                        predicted = simulate_tree(ctpm_params, sc, observed, until).tree;
                        break;
                    case Model::kHawkesObserved:
                        if (observed_fit) predicted = simulate_tree(observed_fit->params, sc, observed, until).tree;
                        break;
                    case Model::kRandomCascade: {
                        Rng rng(splitmix64(sc.seed ^ 0x52414e44ULL));
                        predicted = random_cascade(train.posts, rng);
                        break;
                    }
                    case Model::kRandSim: {
                        Rng rng(splitmix64(sc.seed ^ 0x53494dULL));
                        predicted = rand_sim(train.fits, observed, sc, rng, until).tree;
                        break;
                    }
                    case Model::kAvgSim:
                        predicted = simulate_tree(averaged, sc, observed, until).tree;
                        break;
                }
                if (predicted) {
                    rec.has_prediction = true;
                    rec.predicted = tree_metrics(*predicted);
                    rec.ks = ks_against(truth, *predicted);
                }
                out.push_back(std::move(rec));
            }
        }
    }
    return out;
}

std::vector<Corpus> load_input(const ExperimentConfig& cfg) {
    std::vector<Corpus> corpora;
    if (cfg.posts_file.empty()) {
        SynthConfig synth = cfg.synth;
        synth.sim.T = cfg.sim.T;
        synth.sim.N = cfg.sim.N;
        corpora = synthetic_corpora(synth, cfg.seed);
    } else {
        for (auto& [name, corpus] : load_corpora(cfg.posts_file, cfg.comments_file)) corpora.push_back(std::move(corpus));
    }
    if (!cfg.communities.empty()) {
        std::vector<Corpus> kept;
        for (const std::string& name : cfg.communities) {
            const auto it = std::find_if(corpora.begin(), corpora.end(), [&](const Corpus& c) { return c.community == name; });
            if (it == corpora.end()) throw std::invalid_argument("community '" + name + "' not found in the input");
            kept.push_back(std::move(*it));
        }
        corpora = std::move(kept);
    }
    return corpora;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressCallback& progress) {
    cfg.validate();
    const auto say = [&](const std::string& msg) {
        if (progress) progress(msg);
    };

    std::vector<Corpus> corpora = load_input(cfg);
    std::vector<std::size_t> train_sizes = cfg.train_sizes;
    std::sort(train_sizes.begin(), train_sizes.end());
    train_sizes.erase(std::unique(train_sizes.begin(), train_sizes.end()), train_sizes.end());
    const std::size_t max_train = train_sizes.back();
    const bool wants_ctpm = std::find(cfg.models.begin(), cfg.models.end(), Model::kCtpm) != cfg.models.end();

    ExperimentResult result;
    std::vector<PredictionRecord> records;
    for (Corpus& corpus : corpora) {
        corpus.normalize();
        // Nothing after the simulation horizon can be predicted.
        for (CascadeTree& t : corpus.posts) t = truncate_observed(t, cfg.sim.T / 60.0);
        double test_start = 0.0;
        if (cfg.test_start) {
            test_start = *cfg.test_start;
        } else {
            if (corpus.posts.size() < max_train + cfg.n_test) {
                throw std::invalid_argument("community " + corpus.community + " has " + std::to_string(corpus.posts.size()) +
                                            " posts, need " + std::to_string(max_train + cfg.n_test));
            }
            test_start = corpus.posts[max_train].root().created_at;
        }
        auto [train_all, test] = chronological_split(corpus, {cfg.n_test, max_train, test_start});

        say(corpus.community + ": fitting " + std::to_string(train_all.posts.size()) + " training posts");
        FitConfig train_fit = cfg.fit;
        if (cfg.fit_train_to_horizon) train_fit.time_horizon = cfg.sim.T;
        const std::vector<FitResult> fits_all = fit_all(train_all.posts, train_fit, cfg.jobs);

        CommunityStats stats;
        stats.community = corpus.community;
        stats.train_posts = train_all.posts.size();
        stats.test_posts = test.posts.size();
        stats.size_histogram = size_distribution(test.posts);
        const std::vector<std::size_t> thresholds{1, 5, 10};
        const std::vector<double> velocity_hours{0.5, 1.0, 6.0};
        stats.velocity = observation_velocity_table(test.posts, thresholds, velocity_hours);
        const std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
        const std::vector<double> curve_hours{0.5, 1.0, 2.0, 4.0, 6.0, 12.0, 24.0};
        stats.lifetime = lifetime_curves(test.posts, fractions, curve_hours);
        for (const FitResult& f : fits_all) {
            switch (f.status) {
                case FitStatus::kConverged: ++stats.fit_converged; break;
                case FitStatus::kNotConverged: ++stats.fit_not_converged; break;
                case FitStatus::kNotEnoughData: ++stats.fit_not_enough_data; break;
            }
        }

        for (const std::size_t m : train_sizes) {
            TrainingSet train;
            train.size = m;
            const std::size_t offset = train_all.posts.size() - m;
            train.posts = std::span<const CascadeTree>(train_all.posts).subspan(offset);
            train.fits.assign(fits_all.begin() + static_cast<std::ptrdiff_t>(offset), fits_all.end());
            assign_goodness(train.fits);
            if (wants_ctpm) train.graph = build_graph(train.posts, train.fits, cfg.top_n);

            say(corpus.community + ": predicting " + std::to_string(test.posts.size()) + " test posts with " +
                std::to_string(m) + " training posts");
            std::vector<std::vector<PredictionRecord>> per_post(test.posts.size());
            std::vector<char> isolated(test.posts.size(), 0);
            parallel_for(test.posts.size(), cfg.jobs, [&](std::size_t i) {
                bool iso = false;
                per_post[i] = predict_post(cfg, corpus.community, train, test.posts[i], iso);
                isolated[i] = iso ? 1 : 0;
            });
            if (m == max_train) stats.isolated_test_posts = static_cast<std::size_t>(std::count(isolated.begin(), isolated.end(), 1));
            for (auto& recs : per_post) {
                for (auto& r : recs) records.push_back(std::move(r));
            }
        }
        result.stats.push_back(std::move(stats));
    }

    result.comparisons = compare_models(records);
    result.report = aggregate(std::move(records), cfg.size_classes);
    return result;
}

std::vector<ModelComparison> compare_models(std::span<const PredictionRecord> records) {
    using GroupKey = std::tuple<std::string, std::size_t, double>;
    using PairKey = std::pair<std::string, std::size_t>;  // post, run
    std::map<GroupKey, std::map<std::string, std::map<PairKey, const PredictionRecord*>>> groups;
    for (const PredictionRecord& r : records) {
        if (!r.has_prediction) continue;
        groups[{r.community, r.train_size, r.observe_hours}][r.model][{r.post_id, r.run}] = &r;
    }
    std::vector<ModelComparison> out;
    for (const auto& [key, by_model] : groups) {
        const auto& [community, train_size, hours] = key;
        for (const Metric metric : kAllMetrics) {
            for (const auto& [model, mine] : by_model) {
                for (const auto& [baseline, theirs] : by_model) {
                    if (model == baseline) continue;
                    std::vector<double> diffs;
                    for (const auto& [pair, rec] : mine) {
                        const auto it = theirs.find(pair);
                        if (it == theirs.end()) continue;
                        const auto e1 = relative_error(*rec, metric);
                        const auto e2 = relative_error(*it->second, metric);
                        if (e1 && e2) diffs.push_back(*e1 - *e2);
                    }
                    ModelComparison c{community, train_size, hours, to_string(metric), model, baseline, diffs.size(),
                                      mean_ci95(diffs)};
                    out.push_back(std::move(c));
                }
            }
        }
    }
    return out;
}

namespace {

json num_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

void write_experiment_outputs(const std::filesystem::path& out_dir,
                              const ExperimentConfig& cfg,
                              const ExperimentResult& result,
                              double elapsed_seconds) {
    std::filesystem::create_directories(out_dir);

    std::ostringstream records;
    write_records_csv(records, result.report.records);
    write_text(out_dir / "records.csv", records.str());

    std::ostringstream agg;
    write_aggregate_csv(agg, result.report.aggregates);
    write_text(out_dir / "aggregate.csv", agg.str());

    std::ostringstream agg_jsonl;
    write_aggregate_jsonl(agg_jsonl, result.report.aggregates);
    write_text(out_dir / "aggregate.jsonl", agg_jsonl.str());

    std::ostringstream cmp;
    cmp << "community,train_size,observe_hours,metric,model,baseline,pairs,mean_diff,ci_low,ci_high,significantly_better\n";
    for (const ModelComparison& c : result.comparisons) {
        cmp << c.community << ',' << c.train_size << ',' << format_number(c.observe_hours) << ',' << c.metric << ','
            << c.model << ',' << c.baseline << ',' << c.pairs << ',' << format_number(c.difference.mean) << ','
            << format_number(c.difference.low) << ',' << format_number(c.difference.high) << ','
            << (c.significantly_better() ? 1 : 0) << '\n';
    }
    write_text(out_dir / "comparisons.csv", cmp.str());

    json stats = json::array();
    for (const CommunityStats& s : result.stats) {
        json hist = json::object();
        for (const auto& [size, n] : s.size_histogram) hist[std::to_string(size)] = n;
        json velocity = json::array();
        for (const VelocityRow& v : s.velocity) {
            velocity.push_back({{"threshold", v.threshold},
                                {"observe_hours", v.observe_hours},
                                {"posts_at_least", v.posts_at_least},
                                {"mean_final_at_least", num_or_null(v.mean_final_at_least)},
                                {"posts_below", v.posts_below},
                                {"mean_final_below", num_or_null(v.mean_final_below)}});
        }
        stats.push_back({{"community", s.community},
                         {"train_posts", s.train_posts},
                         {"test_posts", s.test_posts},
                         {"test_size_histogram", hist},
                         {"velocity", velocity},
                         {"lifetime",
                          {{"fractions", s.lifetime.lifetime_fractions},
                           {"pct_by_lifetime", s.lifetime.pct_by_lifetime},
                           {"hours", s.lifetime.hours},
                           {"pct_by_hours", s.lifetime.pct_by_hours},
                           {"posts_used", s.lifetime.posts_used}}},
                         {"fits",
                          {{"converged", s.fit_converged},
                           {"not_converged", s.fit_not_converged},
                           {"not_enough_data", s.fit_not_enough_data}}},
                         {"isolated_test_posts", s.isolated_test_posts}});
    }
    write_text(out_dir / "stats.json", stats.dump(2) + "\n");

    json config = json::object();
    for (const auto& [k, v] : cfg.to_key_values()) config[k] = v;
    const json manifest{
        {"tool", "ctpm"},
        {"version", kToolVersion},
        {"seed", cfg.seed},
        {"config", config},
        {"inputs",
         cfg.posts_file.empty() ? json{{"synthetic", true}}
                                : json{{"posts_file", cfg.posts_file.string()}, {"comments_file", cfg.comments_file.string()}}},
        {"outputs", {"records.csv", "aggregate.csv", "aggregate.jsonl", "comparisons.csv", "stats.json"}},
        {"csv_schema_version", kCsvSchemaVersion},
        {"timing", {{"elapsed_seconds", elapsed_seconds}}},
    };
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace ctpm
