#include "stickersel/app/cli.hpp"

#include "stickersel/app/http.hpp"
#include "stickersel/app/service.hpp"
#include "stickersel/error.hpp"
#include "stickersel/evaluation.hpp"
#include "stickersel/image.hpp"
#include "stickersel/synthetic.hpp"
#include "stickersel/training.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

namespace stickersel::app {

using nlohmann::json;

namespace {

struct CommonArgs {
    std::string dataset;
    std::string format = "stickerint";
    std::string cache_dir;
};

void add_dataset(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("dataset", a.dataset, "Corpus directory (contains manifest.json)")->required();
    cmd->add_option("--format", a.format, "Corpus format: stickerint or mod")->capture_default_str();
}

void add_cache(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--cache-dir", a.cache_dir, "Directory for knowledge, embedding and description caches");
}

Corpus load(const CommonArgs& a) { return load_corpus(a.dataset, parse_corpus_format(a.format)); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw LoadError("cannot write " + path);
    f << text;
}

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw LoadError("cannot read " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw LoadError("malformed JSON in " + path + ": " + e.what());
    }
}

Backends backends_for(const PipelineConfig& config, const CommonArgs& a) {
    auto enc = config.encoders;
    if (!a.cache_dir.empty()) enc.cache_dir = a.cache_dir;
    return make_backends(enc);
}

json stats_json(const SplitStats& s) {
    return {{"conversations", s.conversations}, {"sr", s.sr},
            {"dr", s.dr},                       {"utterances", s.utterances},
            {"stickers", s.stickers},           {"users", s.users},
            {"avg_utterances", s.avg_utterances}, {"avg_users", s.avg_users},
            {"avg_tokens", s.avg_tokens}};
}

// Applies one --ablate value to the config.
void apply_ablation(PipelineConfig& c, const std::string& spec) {
    if (spec == "intention") {
        c.model.use_intention = false;
    } else if (spec == "knowledge") {
        c.model.use_knowledge = false;
    } else if (spec == "attributes" || spec == "attribute") {
        c.model.attributes.clear();
    } else if (spec.rfind("attributes=", 0) == 0) {
        c.model.attributes = parse_attributes_code(spec.substr(11));
    } else {
        throw ConfigError("unknown ablation '" + spec + "' (intention, knowledge, attributes, attributes=G,P,F,V)");
    }
}

std::string checkpoint_id_for(const std::string& path) { return std::filesystem::path(path).stem().string(); }

std::atomic<HttpServer*> g_server{nullptr};

void on_signal(int) {
    if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sticker retrieval toolkit"};
    app.require_subcommand(1);
    CommonArgs common;

    // stats
    auto* stats = app.add_subcommand("stats", "Corpus statistics per split");
    add_dataset(stats, common);

    // ssim-report
    std::size_t bins = 10;
    auto* ssim_cmd = app.add_subcommand("ssim-report", "Mean pairwise SSIM of the sticker set");
    add_dataset(ssim_cmd, common);
    ssim_cmd->add_option("--bins", bins, "Histogram bins")->capture_default_str();

    // train
    std::string config_path, out_path, log_path;
    std::vector<std::string> overrides;
    auto* train_cmd = app.add_subcommand("train", "Train and write a checkpoint");
    add_dataset(train_cmd, common);
    add_cache(train_cmd, common);
    train_cmd->add_option("--config", config_path, "Config file (JSON or key=value lines)");
    train_cmd->add_option("--set", overrides, "Config override, e.g. training.margin=0.3");
    train_cmd->add_option("--out", out_path, "Checkpoint path")->required();
    train_cmd->add_option("--log", log_path, "Write the per-epoch log as JSON");

    // evaluate
    std::string checkpoint_path, split_name = "test", loss_form, csv_path, compare_path;
    std::vector<std::string> ablations;
    std::size_t window = 0, recall_candidates = 0;
    std::vector<std::size_t> ns{1, 3, 5};
    bool retrain = false;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a split");
    add_dataset(eval_cmd, common);
    add_cache(eval_cmd, common);
    eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint path")->required();
    eval_cmd->add_option("--split", split_name, "train, valid or test")->capture_default_str();
    eval_cmd->add_option("--ablate", ablations, "intention | knowledge | attributes | attributes=G,P,F,V");
    eval_cmd->add_option("--context-window", window, "Most recent utterances kept (default: checkpoint config)");
    eval_cmd->add_option("--loss-form", loss_form, "clamped_standard or paper_literal (used with --retrain)");
    eval_cmd->add_flag("--retrain", retrain, "Retrain on the train split under the ablated config first");
    eval_cmd->add_option("--config", config_path, "Training config used with --retrain");
    eval_cmd->add_option("--set", overrides, "Config override applied before evaluation");
    eval_cmd->add_option("-n,--precision-at", ns, "Cutoffs for P@N")->capture_default_str();
    eval_cmd->add_option("--recall-candidates", recall_candidates, "Pool size n for Rn@k (0 disables)");
    eval_cmd->add_option("--out", out_path, "Write the JSON report here instead of stdout");
    eval_cmd->add_option("--csv", csv_path, "Also write a CSV table");
    eval_cmd->add_option("--compare", compare_path, "Paired t-test of per-query AP against another report");

    // build-index
    std::string index_path, relation_path;
    auto* index_cmd = app.add_subcommand("build-index", "Precompute sticker representations");
    add_dataset(index_cmd, common);
    add_cache(index_cmd, common);
    index_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint path")->required();
    index_cmd->add_option("--out", index_path, "Index path")->required();
    index_cmd->add_option("--dump-relation-scores", relation_path, "Write per-sticker relation scores as JSON");

    // retrieve
    std::string conversation_path;
    std::size_t k = 5;
    auto* retrieve_cmd = app.add_subcommand("retrieve", "Rank stickers for one conversation");
    add_dataset(retrieve_cmd, common);
    add_cache(retrieve_cmd, common);
    retrieve_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint path")->required();
    retrieve_cmd->add_option("--index", index_path, "Index path")->required();
    retrieve_cmd->add_option("--conversation", conversation_path, "Conversation JSON file")->required();
    retrieve_cmd->add_option("-k", k, "Number of stickers")->capture_default_str()->check(CLI::PositiveNumber);
    retrieve_cmd->add_option("--dump-relation-scores", relation_path,
                             "Write relation scores of the returned stickers as JSON");

    // serve
    std::string host = "127.0.0.1", db_path;
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP retrieval service");
    add_dataset(serve_cmd, common);
    add_cache(serve_cmd, common);
    serve_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint path")->required();
    serve_cmd->add_option("--index", index_path, "Index path")->required();
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port)->capture_default_str();
    serve_cmd->add_option("--db", db_path, "Session database file (default: in memory)");

    // make-synthetic
    std::string synth_dir;
    std::uint64_t synth_seed = 5;
    auto* synth_cmd = app.add_subcommand("make-synthetic", "Write the planted demo corpus");
    synth_cmd->add_option("dir", synth_dir, "Output directory")->required();
    synth_cmd->add_option("--seed", synth_seed)->capture_default_str();

    std::vector<const char*> argv{"stickersel"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*stats) {
            const auto corpus = load(common);
            const auto report = corpus_stats(corpus);
            json j = json::object();
            for (const auto& [name, s] : report.splits) j[name] = stats_json(s);
            j["captioned_stickers"] = report.captioned_stickers;
            out << j.dump(2) << '\n';
        } else if (*ssim_cmd) {
            const auto corpus = load(common);
            std::vector<GrayImage> images;
            for (const auto& [id, s] : corpus.stickers) images.push_back(load_gray(s.image_ref));
            const auto r = similarity_report(images, bins);
            out << json{{"stickers", images.size()}, {"pairs", r.pairs}, {"mean", r.mean},
                        {"bin_edges", r.bin_edges}, {"counts", r.counts}}
                       .dump(2)
                << '\n';
        } else if (*train_cmd) {
            const auto corpus = load(common);
            PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
            if (!overrides.empty()) {
                auto j = to_json(config);
                for (const auto& o : overrides) apply_override(j, o);
                config = config_from_json(j, config);
            }
            if (!common.cache_dir.empty()) config.encoders.cache_dir = common.cache_dir;
            validate(config);
            const auto backends = make_backends(config.encoders);
            out << "training: margin=" << config.training.margin << " lr=" << config.training.learning_rate
                << " batch=" << config.training.batch_size << " epochs=" << config.training.epochs
                << " loss_form=" << to_string(config.training.loss_form) << '\n';
            const auto result = train(corpus, config, backends, [&](const EpochLog& e) {
                out << "epoch " << e.epoch << " joint=" << e.joint << " retrieval=" << e.retrieval
                    << " intention=" << e.intention;
                if (e.valid_map) out << " valid_mAP=" << *e.valid_map << " valid_P@1=" << *e.valid_p1;
                out << '\n';
            });
            save_checkpoint(result.checkpoint, out_path);
            if (!log_path.empty()) {
                write_text(log_path, json{{"config", to_json(config)},
                                          {"best_epoch", result.best_epoch},
                                          {"epochs", log_to_json(result.log)}}
                                         .dump(2));
            }
            out << "best epoch " << result.best_epoch << ", model " << result.checkpoint.model_version() << " -> "
                << out_path << '\n';
        } else if (*eval_cmd) {
            const auto corpus = load(common);
            auto checkpoint = load_checkpoint(checkpoint_path);
            PipelineConfig config = checkpoint.config;
            if (retrain && !config_path.empty()) config = load_config(config_path, config);
            if (!overrides.empty()) {
                auto j = to_json(config);
                for (const auto& o : overrides) apply_override(j, o);
                config = config_from_json(j, config);
            }
            for (const auto& a : ablations) apply_ablation(config, a);
            if (!loss_form.empty()) config.training.loss_form = parse_loss_form(loss_form);
            validate(config);
            const auto backends = backends_for(config, common);
            const auto assets = featurize_stickers(corpus.stickers, backends);
            if (retrain) {
                checkpoint = train(corpus, config, backends, {}, &assets).checkpoint;
            } else {
                check_backends(checkpoint, backends.identities());
                checkpoint.config = config;
            }
            EvaluationRequest req;
            req.split = parse_split(split_name);
            req.window = window;
            req.options.ns = ns;
            req.options.recall_candidates = recall_candidates;
            auto report = evaluate_corpus(corpus, checkpoint, backends, req, &assets);
            report.config["evaluation"]["ablations"] = ablations;
            report.config["evaluation"]["retrained"] = retrain;
            auto j = report_to_json(report);
            if (!compare_path.empty()) {
                const auto other = read_json_file(compare_path);
                std::map<std::string, double> theirs;
                for (const auto& q : other.at("queries")) {
                    theirs[q.at("query_id").get<std::string>()] = q.at("average_precision").get<double>();
                }
                std::vector<double> a, b;
                for (const auto& q : report.queries) {
                    if (auto it = theirs.find(q.query_id); it != theirs.end()) {
                        a.push_back(q.average_precision);
                        b.push_back(it->second);
                    }
                }
                try {
                    const auto t = paired_t_test(a, b);
                    j["comparison"] = {{"against", compare_path}, {"pairs", a.size()}, {"metric", "average_precision"},
                                       {"t", t.t}, {"p", t.p}, {"df", t.df}};
                } catch (const DegenerateError& e) {
                    j["comparison"] = {{"against", compare_path}, {"pairs", a.size()}, {"error", e.what()}};
                }
            }
            if (out_path.empty()) {
                out << j.dump(2) << '\n';
            } else {
                write_text(out_path, j.dump(2) + "\n");
                out << "mAP " << report.overall.map;
                for (const auto& [n, v] : report.overall.precision) out << " P@" << n << ' ' << v;
                out << " -> " << out_path << '\n';
            }
            if (!csv_path.empty()) write_text(csv_path, report_to_csv(report));
        } else if (*index_cmd) {
            const auto corpus = load(common);
            const auto checkpoint = load_checkpoint(checkpoint_path);
            const auto backends = backends_for(checkpoint.config, common);
            check_backends(checkpoint, backends.identities());
            const auto features = features_of(featurize_stickers(corpus.stickers, backends));
            const auto options = model_options(checkpoint.config);
            const auto index = build_index(checkpoint.params, features, options, checkpoint.model_version());
            save_index(index, index_path);
            if (!relation_path.empty()) {
                write_text(relation_path, relation_scores_json(checkpoint.params, features, options).dump(2) + "\n");
            }
            out << json{{"entries", index.size()}, {"dim", index.dim()}, {"model_version", index.model_version},
                        {"fuse_mode", to_string(index.fuse_mode)}, {"path", index_path}}
                       .dump(2)
                << '\n';
        } else if (*retrieve_cmd) {
            const auto corpus = load(common);
            auto checkpoint = load_checkpoint(checkpoint_path);
            const auto backends = backends_for(checkpoint.config, common);
            check_backends(checkpoint, backends.identities());
            std::ifstream f(conversation_path);
            if (!f) throw LoadError("cannot read " + conversation_path);
            const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
            const auto conversation = conversation_from_json(text);
            const Retriever retriever(checkpoint, load_index(index_path), backends, captions_from(corpus));
            QueryEncoding enc;
            const auto ranked = retriever.retrieve(conversation, k, &enc);
            auto j = ranked_to_json(ranked);
            j["predicted_label"] = enc.predicted_label;
            j["context_text"] = enc.context_text;
            j["knowledge"] = enc.knowledge;
            out << j.dump(2) << '\n';
            if (!relation_path.empty()) {
                std::map<std::string, Sticker> chosen;
                for (const auto& e : ranked.entries) chosen[e.sticker_id] = corpus.sticker(e.sticker_id);
                const auto features = features_of(featurize_stickers(chosen, backends));
                write_text(relation_path,
                           relation_scores_json(checkpoint.params, features, model_options(checkpoint.config)).dump(2) +
                               "\n");
            }
        } else if (*serve_cmd) {
            auto corpus = load(common);
            auto checkpoint = load_checkpoint(checkpoint_path);
            const auto backends = backends_for(checkpoint.config, common);
            check_backends(checkpoint, backends.identities());
            auto store = std::make_shared<SqliteSessionStore>(db_path);
            RetrievalService service(std::move(corpus), backends, store);
            service.add_checkpoint(checkpoint_id_for(checkpoint_path), std::move(checkpoint));
            service.add_index(checkpoint_id_for(index_path), load_index(index_path));
            HttpServer server(service);
            const int bound = server.bind(host, port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            out << "listening on http://" << host << ':' << bound << std::endl;
            server.run();
            g_server = nullptr;
        } else if (*synth_cmd) {
            SyntheticOptions o;
            o.seed = synth_seed;
            const auto corpus = make_planted_corpus(synth_dir, o);
            out << "wrote " << corpus.conversations.size() << " conversations and " << corpus.stickers.size()
                << " stickers to " << synth_dir << '\n';
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace stickersel::app
