// Command-line front end: every pipeline stage as a subcommand.

#include "ctpm/baselines.hpp"
#include "ctpm/evaluate.hpp"
#include "ctpm/experiment.hpp"
#include "ctpm/hawkes.hpp"
#include "ctpm/infer.hpp"
#include "ctpm/ingest.hpp"
#include "ctpm/postgraph.hpp"
#include "ctpm/simulate.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ctpm;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRuntime = 4;

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Files and directories this invocation created; removed if it fails.
std::vector<fs::path> g_outputs;

fs::path output(const fs::path& p) {
    if (!fs::exists(p)) g_outputs.push_back(p);
    return p;
}

void remove_partial_outputs() {
    for (auto it = g_outputs.rbegin(); it != g_outputs.rend(); ++it) {
        std::error_code ec;
        fs::remove_all(*it, ec);
    }
}

fs::path input(const fs::path& p) {
    if (p.is_relative() && !fs::exists(p)) {
        if (const char* dir = std::getenv("CTPM_DATA_DIR")) {
            const fs::path candidate = fs::path(dir) / p;
            if (fs::exists(candidate)) return candidate;
        }
    }
    if (!fs::exists(p)) throw ValidationError("input not found: " + p.string());
    return p;
}

fs::path corpus_file(const fs::path& dir, const std::string& stem) {
    for (const char* ext : {".jsonl", ".jsonl.gz"}) {
        const fs::path p = dir / (stem + ext);
        if (fs::exists(p)) return p;
    }
    throw ValidationError("no " + stem + ".jsonl[.gz] in " + dir.string());
}

Corpus read_corpus(const fs::path& dir, const std::string& community) {
    const fs::path base = input(dir);
    return load_corpus(corpus_file(base, "posts"), corpus_file(base, "comments"),
                       community.empty() ? std::nullopt : std::optional<std::string>(community));
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json params_to_json(const HawkesParams& p) {
    return {{"a", p.a}, {"b", p.b}, {"alpha", p.alpha}, {"mu", p.mu}, {"sigma", p.sigma}, {"n_b", p.n_b}};
}

HawkesParams params_from_json(const json& j) {
    try {
        const json& p = j.contains("params") ? j.at("params") : j;
        return {p.at("a").get<double>(),  p.at("b").get<double>(),     p.at("alpha").get<double>(),
                p.at("mu").get<double>(), p.at("sigma").get<double>(), p.at("n_b").get<double>()};
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad parameter file: ") + e.what());
    }
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config, const json& inputs,
                    const json& outputs, double seconds) {
    write_json_file(output(dir / "manifest.json"), {{"tool", "ctpm"},
                                                    {"version", kToolVersion},
                                                    {"command", command},
                                                    {"config", config},
                                                    {"inputs", inputs},
                                                    {"outputs", outputs},
                                                    {"timing", {{"elapsed_seconds", seconds}}}});
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ValidationError("not a number: " + item);
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Comment thread prediction: Hawkes fits, post graph inference, simulation and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    const auto start = std::chrono::steady_clock::now();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse post/comment dumps into one corpus directory per community");
    std::string in_posts, in_comments, ingest_out, ingest_community;
    ingest->add_option("--posts", in_posts, "Post dump (.jsonl or .jsonl.gz)")->required();
    ingest->add_option("--comments", in_comments, "Comment dump (.jsonl or .jsonl.gz)")->required();
    ingest->add_option("--out", ingest_out, "Output directory")->required();
    ingest->add_option("--community", ingest_community, "Keep only this community");

    // fit
    auto* fitc = app.add_subcommand("fit", "Fit Hawkes parameters to every post of a corpus");
    std::string fit_corpus, fit_out, fit_community;
    std::size_t min_comments = FitConfig{}.min_comments;
    std::size_t max_iterations = FitConfig{}.max_iterations;
    unsigned jobs = 1;
    fitc->add_option("--corpus", fit_corpus, "Corpus directory")->required();
    fitc->add_option("--community", fit_community, "Community to select from a multi-community corpus");
    fitc->add_option("--out", fit_out, "Fit table (.jsonl)")->required();
    fitc->add_option("--min-comments", min_comments, "Smallest cascade given a full fit")->capture_default_str();
    fitc->add_option("--max-iterations", max_iterations, "Optimizer iteration limit")->capture_default_str();
    fitc->add_option("--jobs", jobs, "Worker threads")->capture_default_str();

    // graph
    auto* graphc = app.add_subcommand("graph", "Build the post similarity graph over a fitted corpus");
    std::string graph_corpus, graph_fits, graph_out, graph_community;
    std::size_t top_n = kDefaultTopN;
    graphc->add_option("--corpus", graph_corpus, "Corpus directory")->required();
    graphc->add_option("--community", graph_community, "Community to select");
    graphc->add_option("--fits", graph_fits, "Fit table from 'fit'")->required();
    graphc->add_option("--out", graph_out, "Graph file (.jsonl)")->required();
    graphc->add_option("--top-n", top_n, "Edges kept per node")->capture_default_str();

    // infer
    auto* inferc = app.add_subcommand("infer", "Infer parameters for a new post from the graph");
    std::string infer_graph, infer_fits, infer_out, post_title, post_author, post_id = "new_post";
    InferConfig icfg;
    std::size_t infer_top_n = 0;
    inferc->add_option("--graph", infer_graph, "Graph file from 'graph'")->required();
    inferc->add_option("--fits", infer_fits, "Fit table from 'fit'")->required();
    inferc->add_option("--post-title", post_title, "Title of the new post")->required();
    inferc->add_option("--post-author", post_author, "Author of the new post")->required();
    inferc->add_option("--post-id", post_id, "Id of the new post")->capture_default_str();
    inferc->add_option("--top-n", infer_top_n, "Edges kept for the new post (default: the graph's)");
    inferc->add_option("--walks", icfg.walks_per_node, "Walks per node")->capture_default_str();
    inferc->add_option("--walk-len", icfg.walk_length, "Nodes per walk")->capture_default_str();
    inferc->add_option("--window", icfg.window, "Co-occurrence window")->capture_default_str();
    inferc->add_option("--epochs", icfg.epochs, "Epochs")->capture_default_str();
    inferc->add_option("--lr", icfg.r_base, "Base learning rate")->capture_default_str();
    inferc->add_option("--seed", icfg.seed, "Random seed")->capture_default_str();
    inferc->add_flag("--regenerate-walks", icfg.regenerate_walks, "Draw fresh walks every epoch");
    inferc->add_option("--out", infer_out, "Parameter file (.json)")->required();

    // simulate
    auto* simc = app.add_subcommand("simulate", "Simulate cascades from parameters");
    std::string sim_params, sim_observed, sim_out, sim_post_id = "post";
    double observe_hours = -1.0;
    SimConfig scfg;
    simc->add_option("--params", sim_params, "Parameter file from 'infer' or 'fit-one'")->required();
    simc->add_option("--observed", sim_observed, "Tree file whose first tree is the observed cascade");
    simc->add_option("--observe-hours", observe_hours, "Keep only comments within this window of the observed cascade");
    simc->add_option("--post-id", sim_post_id, "Post id when no observed cascade is given")->capture_default_str();
    simc->add_option("--T", scfg.T, "Horizon in minutes")->capture_default_str();
    simc->add_option("--N", scfg.N, "Comment cap per tree")->capture_default_str();
    simc->add_option("--runs", scfg.runs, "Number of cascades")->capture_default_str();
    simc->add_option("--seed", scfg.seed, "Random seed")->capture_default_str();
    simc->add_option("--out", sim_out, "Tree file (.jsonl)")->required();

    // eval
    auto* evalc = app.add_subcommand("eval", "Compare predicted trees with ground truth");
    std::string eval_truth, eval_pred, eval_out, eval_metrics = "size,depth,breadth,virality", eval_classes = "0,5,50,100";
    evalc->add_option("--truth", eval_truth, "Ground-truth trees (.jsonl) or corpus directory")->required();
    evalc->add_option("--predictions", eval_pred, "Predicted trees (.jsonl)")->required();
    evalc->add_option("--metrics", eval_metrics, "Metrics to report")->capture_default_str();
    evalc->add_option("--size-classes", eval_classes, "Lower edges of size classes, in comments")->capture_default_str();
    evalc->add_option("--out", eval_out, "Output directory")->required();

    // experiment
    auto* expc = app.add_subcommand("experiment", "Run the full protocol from a key = value config file");
    std::string exp_config, exp_out;
    std::vector<std::string> overrides;
    unsigned exp_jobs = 0;
    expc->add_option("config", exp_config, "Config file")->required();
    expc->add_option("--out", exp_out, "Output directory")->required();
    expc->add_option("--set", overrides, "Override a config entry, key=value");
    expc->add_option("--jobs", exp_jobs, "Worker threads (overrides the config)");
    bool quiet = false;
    expc->add_flag("--quiet", quiet, "No progress messages");

    // synth
    auto* synthc = app.add_subcommand("synth", "Write the bundled synthetic corpus as dumps");
    std::string synth_out;
    SynthConfig synth_cfg;
    std::uint64_t synth_seed = 1;
    synthc->add_option("--out", synth_out, "Output directory")->required();
    synthc->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
    synthc->add_option("--communities", synth_cfg.communities, "Pseudo-communities")->capture_default_str();
    synthc->add_option("--posts", synth_cfg.posts_per_community, "Posts per community")->capture_default_str();
    synthc->add_option("--T", synth_cfg.sim.T, "Cascade horizon in minutes")->capture_default_str();
    synthc->add_option("--N", synth_cfg.sim.N, "Comment cap per cascade")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (ingest->parsed()) {
            LoadStats stats;
            auto corpora = load_corpora(input(in_posts), input(in_comments), &stats);
            const fs::path out = output(ingest_out);
            fs::create_directories(out);
            json written = json::array();
            for (auto& [name, corpus] : corpora) {
                if (!ingest_community.empty() && name != ingest_community) continue;
                const fs::path dir = out / name;
                fs::create_directories(dir);
                write_corpus(corpus, dir / "posts.jsonl", dir / "comments.jsonl");
                written.push_back({{"community", name}, {"posts", corpus.posts.size()}});
            }
            if (!ingest_community.empty() && written.empty()) {
                throw ValidationError("community '" + ingest_community + "' not found");
            }
            const json stats_json{{"posts", stats.posts},
                                  {"comments", stats.comments},
                                  {"unmatched_link", stats.unmatched_link},
                                  {"orphaned", stats.orphaned},
                                  {"time_inversions", stats.time_inversions}};
            write_manifest(out, "ingest", {{"community", ingest_community}},
                           {{"posts", in_posts}, {"comments", in_comments}}, {{"communities", written}, {"stats", stats_json}},
                           seconds_since(start));
            std::cout << stats_json.dump() << '\n';
        } else if (fitc->parsed()) {
            FitConfig cfg;
            cfg.min_comments = min_comments;
            cfg.max_iterations = max_iterations;
            cfg.validate();
            const Corpus corpus = read_corpus(fit_corpus, fit_community);
            const std::vector<FitResult> fits = fit_all(corpus.posts, cfg, jobs);
            std::vector<FitEntry> entries;
            std::map<std::string, std::size_t> counts;
            for (std::size_t i = 0; i < fits.size(); ++i) {
                entries.push_back({corpus.posts[i].root().post_id, fits[i]});
                ++counts[to_string(fits[i].status)];
            }
            save_fits(output(fit_out), entries);
            std::cout << json(counts).dump() << '\n';
        } else if (graphc->parsed()) {
            const Corpus corpus = read_corpus(graph_corpus, graph_community);
            const std::vector<FitEntry> entries = load_fits(input(graph_fits));
            std::map<std::string, const FitResult*> by_id;
            for (const FitEntry& e : entries) by_id[e.post_id] = &e.fit;
            std::vector<FitResult> fits;
            for (const CascadeTree& t : corpus.posts) {
                const auto it = by_id.find(t.root().post_id);
                if (it == by_id.end()) throw ValidationError("no fit for post " + t.root().post_id);
                fits.push_back(*it->second);
            }
            const PostGraph g = build_graph(corpus.posts, fits, top_n);
            save_graph(output(graph_out), g);
            std::cout << json{{"nodes", g.node_count()}, {"edges", g.edge_count()}}.dump() << '\n';
        } else if (inferc->parsed()) {
            const std::vector<FitEntry> fits = load_fits(input(infer_fits));
            const PostGraph g = load_graph(input(infer_graph), fits);
            Post x{post_id, post_author, post_title, 0.0, ""};
            const PostGraph g_star = attach_post(g, x, infer_top_n == 0 ? g.top_n() : infer_top_n);
            icfg.validate(g_star);
            const InferResult r = run_inference(g_star, icfg);
            if (r.isolated) std::cerr << "warning: post has no similar training posts; using the default embedding\n";
            write_json_file(output(infer_out), {{"post_id", post_id},
                                                {"params", params_to_json(r.params)},
                                                {"isolated", r.isolated},
                                                {"updates", r.updates}});
            std::cout << params_to_json(r.params).dump() << '\n';
        } else if (simc->parsed()) {
            std::ifstream pin(input(sim_params));
            json pj;
            try {
                pj = json::parse(pin);
            } catch (const json::exception& e) {
                throw ValidationError(std::string("bad parameter file: ") + e.what());
            }
            const HawkesParams params = params_from_json(pj);
            scfg.validate();
            CascadeTree observed = CascadeTree::build(Post{sim_post_id, "", "", 0.0, ""}, {});
            std::optional<double> until;
            if (!sim_observed.empty()) {
                const auto trees = read_trees(input(sim_observed));
                if (trees.empty()) throw ValidationError("no trees in " + sim_observed);
                observed = trees.front().tree;
            }
            if (observe_hours >= 0.0) {
                observed = truncate_observed(observed, observe_hours);
                until = observe_hours * 60.0;
            }
            std::vector<TreeRecord> out;
            for (std::size_t run = 0; run < scfg.runs; ++run) {
                SimConfig one = scfg;
                one.seed = derive_seed(scfg.seed, observed.root().post_id, run);
                SimulationResult r = simulate_tree(params, one, observed, until);
                out.push_back({std::move(r.tree), true, r.truncated, "params", run, until.value_or(0.0) / 60.0});
            }
            write_trees(output(sim_out), out);
            std::cout << json{{"trees", out.size()}}.dump() << '\n';
        } else if (evalc->parsed()) {
            std::vector<CascadeTree> truths;
            const fs::path truth_path = input(eval_truth);
            if (fs::is_directory(truth_path)) {
                truths = read_corpus(truth_path, "").posts;
            } else {
                for (TreeRecord& r : read_trees(truth_path)) truths.push_back(std::move(r.tree));
            }
            std::map<std::string, const CascadeTree*> truth_by_id;
            for (const CascadeTree& t : truths) truth_by_id[t.root().post_id] = &t;

            std::vector<Metric> metrics;
            for (const std::string& name : CLI::detail::split(eval_metrics, ',')) {
                bool found = false;
                for (const Metric m : kAllMetrics) {
                    if (to_string(m) == name) {
                        metrics.push_back(m);
                        found = true;
                    }
                }
                if (!found && name != "ks") throw ValidationError("unknown metric " + name);
            }
            SizeClasses classes;
            classes.edges.clear();
            for (const double e : parse_doubles(eval_classes)) classes.edges.push_back(static_cast<std::size_t>(e));

            std::vector<PredictionRecord> records;
            for (const TreeRecord& p : read_trees(input(eval_pred))) {
                const auto it = truth_by_id.find(p.tree.root().post_id);
                if (it == truth_by_id.end()) throw ValidationError("no ground truth for post " + p.tree.root().post_id);
                const CascadeTree& truth = *it->second;
                PredictionRecord rec;
                rec.community = truth.root().community;
                rec.post_id = truth.root().post_id;
                rec.model = p.model;
                rec.observe_hours = p.observe_hours;
                rec.run = p.run;
                rec.has_prediction = true;
                rec.truth_comments = truth.comment_count();
                rec.truth = tree_metrics(truth);
                rec.predicted = tree_metrics(p.tree);
                if (truth.comment_count() >= 10 && p.tree.comment_count() > 0) {
                    rec.ks = ks_statistic(truth.relative_times(), p.tree.relative_times());
                }
                records.push_back(std::move(rec));
            }
            EvalReport report = aggregate(std::move(records), classes);
            std::erase_if(report.aggregates, [&](const AggregateRow& row) {
                return eval_metrics.find(row.metric) == std::string::npos;
            });
            const fs::path out = output(eval_out);
            fs::create_directories(out);
            std::ofstream rec_out(out / "records.csv");
            write_records_csv(rec_out, report.records);
            std::ofstream agg_out(out / "aggregate.csv");
            write_aggregate_csv(agg_out, report.aggregates);
            std::ofstream jsonl_out(out / "aggregate.jsonl");
            write_aggregate_jsonl(jsonl_out, report.aggregates);
            write_manifest(out, "eval", {{"metrics", eval_metrics}, {"size_classes", eval_classes}},
                           {{"truth", eval_truth}, {"predictions", eval_pred}},
                           {"records.csv", "aggregate.csv", "aggregate.jsonl"}, seconds_since(start));
            write_aggregate_csv(std::cout, report.aggregates);
        } else if (expc->parsed()) {
            KeyValues kv = read_key_values(input(exp_config));
            for (const std::string& o : overrides) {
                const auto eq = o.find('=');
                if (eq == std::string::npos) throw ValidationError("--set expects key=value, got " + o);
                kv[o.substr(0, eq)] = o.substr(eq + 1);
            }
            if (exp_jobs > 0) kv["jobs"] = std::to_string(exp_jobs);
            ExperimentConfig cfg = ExperimentConfig::from_key_values(kv);
            if (!cfg.posts_file.empty()) {
                cfg.posts_file = input(cfg.posts_file);
                cfg.comments_file = input(cfg.comments_file);
            }
            cfg.validate();
            const fs::path out = output(exp_out);
            const ExperimentResult result = run_experiment(cfg, [&](const std::string& msg) {
                if (!quiet) std::cerr << msg << '\n';
            });
            write_experiment_outputs(out, cfg, result, seconds_since(start));
            for (const ModelComparison& c : result.comparisons) {
                if (c.model == "ctpm" && c.metric == "size" && !quiet) {
                    std::cerr << c.community << " train=" << c.train_size << " observe=" << c.observe_hours
                              << "h size MRE ctpm-" << c.baseline << " = " << format_number(c.difference.mean) << " ["
                              << format_number(c.difference.low) << ", " << format_number(c.difference.high) << "]\n";
                }
            }
        } else if (synthc->parsed()) {
            const auto corpora = synthetic_corpora(synth_cfg, synth_seed);
            const fs::path out = output(synth_out);
            fs::create_directories(out);
            Corpus all{"", {}};
            for (const Corpus& c : corpora) all.posts.insert(all.posts.end(), c.posts.begin(), c.posts.end());
            write_corpus(all, out / "posts.jsonl", out / "comments.jsonl");
            write_manifest(out, "synth",
                           {{"seed", synth_seed},
                            {"communities", synth_cfg.communities},
                            {"posts_per_community", synth_cfg.posts_per_community},
                            {"T", synth_cfg.sim.T},
                            {"N", synth_cfg.sim.N}},
                           json::object(), {"posts.jsonl", "comments.jsonl"}, seconds_since(start));
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        remove_partial_outputs();
        return kExitValidation;
    } catch (const IngestError& e) {
        std::cerr << "error: " << e.what() << '\n';
        remove_partial_outputs();
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        remove_partial_outputs();
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        remove_partial_outputs();
        return kExitRuntime;
    }
    return 0;
}
