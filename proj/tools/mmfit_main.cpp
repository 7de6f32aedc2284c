#include "mmfit/baseline.hpp"
#include "mmfit/config.hpp"
#include "mmfit/datagen.hpp"
#include "mmfit/inference.hpp"
#include "mmfit/net.hpp"
#include "mmfit/report.hpp"
#include "mmfit/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace mmfit;

namespace {

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration");
    cmd->add_option("--seed", opts.seed, "master seed (overrides the config file)");
    cmd->add_option("--out-dir", opts.out_dir,
                    "output directory (overrides the config file)");
}

// precedence: flags > file > defaults
RunConfig resolve(const CLI::App* cmd, const CommonOpts& opts) {
    RunConfig config;
    if (!opts.config_path.empty()) {
        config = load_run_config(opts.config_path);
    }
    if (cmd->count("--seed") > 0) config.seed = opts.seed;
    if (cmd->count("--out-dir") > 0) config.out_dir = opts.out_dir;
    return config;
}

void echo_config(const RunConfig& config) {
    fs::create_directories(config.out_dir);
    const auto path = fs::path(config.out_dir) / "resolved_config.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << run_config_to_json(config).dump(2) << '\n';
}

void print_summary(const EvalSummary& summary, const std::string& report_path) {
    std::cout << "samples " << summary.per_sample.size() << " mean_error "
              << summary.mean_error << " median_error " << summary.median_error
              << " mean_nmi " << summary.mean_nmi << '\n'
              << "report -> " << report_path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clustering-friendly point embeddings for multi-model multi-type fitting"};
    app.require_subcommand(1);

    CommonOpts gen_opts;
    auto* gen = app.add_subcommand("gen-data", "synthesize LCE / LCE-Unmixed datasets");
    add_common(gen, gen_opts);
    int n_train = 0, n_val = 0, n_test = 0;
    double sigma = 0.0;
    std::string composition;
    gen->add_option("--n-train", n_train, "training sample count");
    gen->add_option("--n-val", n_val, "validation sample count");
    gen->add_option("--n-test", n_test, "test sample count");
    gen->add_option("--sigma", sigma, "noise standard deviation");
    gen->add_option("--composition", composition, "lce | lce_unmixed");

    CommonOpts train_opts;
    auto* train_cmd = app.add_subcommand("train", "train the embedding network");
    add_common(train_cmd, train_opts);
    std::string train_path, val_path, loss_name;
    int epochs = 0, width = 0, depth = 0, embed_dim = 0, checkpoint_every = 0;
    double lr = 0.0;
    bool verbose = false;
    train_cmd->add_option("--train-file", train_path, "training dataset (JSON Lines)")
        ->required();
    train_cmd->add_option("--val-file", val_path, "validation dataset (JSON Lines)");
    train_cmd->add_option("--loss", loss_name,
                          "l2 | ce | mimi | maxinter | minintra | skmeans");
    train_cmd->add_option("--epochs", epochs, "training epochs");
    train_cmd->add_option("--lr", lr, "learning rate");
    train_cmd->add_option("--width", width, "block width");
    train_cmd->add_option("--depth", depth, "number of blocks");
    train_cmd->add_option("--embed-dim", embed_dim, "embedding dimension");
    train_cmd->add_option("--checkpoint-every", checkpoint_every,
                          "periodic training checkpoints (epochs)");
    train_cmd->add_flag("--verbose", verbose, "per-epoch progress on stderr");

    CommonOpts eval_opts;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    add_common(eval_cmd, eval_opts);
    std::string eval_ckpt, eval_data, k_mode = "gt";
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
    eval_cmd->add_option("--data", eval_data, "dataset path")->required();
    eval_cmd->add_option("--k-mode", k_mode, "gt | estimate (K from SOD)");

    CommonOpts select_opts;
    auto* select_cmd = app.add_subcommand("select-k", "model selection per sample");
    add_common(select_cmd, select_opts);
    std::string select_ckpt, select_data;
    select_cmd->add_option("--checkpoint", select_ckpt, "checkpoint path")->required();
    select_cmd->add_option("--data", select_data, "dataset path")->required();

    CommonOpts base_opts;
    auto* base_cmd = app.add_subcommand("baseline", "classical RANSAC baselines");
    add_common(base_cmd, base_opts);
    std::string base_data, base_mode = "seq";
    double threshold = 0.0;
    int iterations = 0;
    base_cmd->add_option("--data", base_data, "dataset path")->required();
    base_cmd->add_option("--mode", base_mode, "seq (multi-type) | ho (general conic)");
    base_cmd->add_option("--threshold", threshold, "inlier threshold (algebraic residual)");
    base_cmd->add_option("--iterations", iterations, "RANSAC iterations per fit");

    CommonOpts export_opts;
    auto* export_cmd =
        app.add_subcommand("export-embeddings", "dump per-point embeddings to CSV");
    add_common(export_cmd, export_opts);
    std::string export_ckpt, export_data;
    export_cmd->add_option("--checkpoint", export_ckpt, "checkpoint path")->required();
    export_cmd->add_option("--data", export_data, "dataset path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            RunConfig config = resolve(gen, gen_opts);
            if (gen->count("--n-train")) config.dataset.n_train = n_train;
            if (gen->count("--n-val")) config.dataset.n_val = n_val;
            if (gen->count("--n-test")) config.dataset.n_test = n_test;
            if (gen->count("--sigma")) config.dataset.noise_sigma = sigma;
            if (gen->count("--composition")) {
                if (composition == "lce") {
                    config.dataset.composition = Composition::LCE;
                } else if (composition == "lce_unmixed") {
                    config.dataset.composition = Composition::LCE_Unmixed;
                } else {
                    throw InvalidSpec("--composition must be lce or lce_unmixed");
                }
            }
            validate(config);
            echo_config(config);
            const struct {
                const char* name;
                int count;
                std::uint64_t stream;
            } splits[] = {{"train", config.dataset.n_train, 1},
                          {"val", config.dataset.n_val, 2},
                          {"test", config.dataset.n_test, 3}};
            for (const auto& split : splits) {
                if (split.count == 0) continue;
                const auto samples =
                    generate(config.dataset_spec(split.count, split.stream));
                const auto path =
                    fs::path(config.out_dir) / (std::string(split.name) + ".jsonl");
                write_dataset(samples, path.string());
                std::cout << split.name << ": " << samples.size() << " samples -> "
                          << path.string() << '\n';
            }
        } else if (train_cmd->parsed()) {
            RunConfig config = resolve(train_cmd, train_opts);
            if (train_cmd->count("--loss")) config.train.loss = loss_name;
            if (train_cmd->count("--epochs")) config.train.epochs = epochs;
            if (train_cmd->count("--lr")) config.train.lr = lr;
            if (train_cmd->count("--width")) config.net.width = width;
            if (train_cmd->count("--depth")) config.net.depth = depth;
            if (train_cmd->count("--embed-dim")) config.net.embed_dim = embed_dim;
            if (train_cmd->count("--checkpoint-every")) {
                config.train.checkpoint_every = checkpoint_every;
            }
            validate(config);
            echo_config(config);

            const auto train_set = read_dataset(train_path);
            std::vector<Sample> val_set;
            if (!val_path.empty()) val_set = read_dataset(val_path);

            EmbedNet net = init_net(2, config.net.width, config.net.depth,
                                    config.net.embed_dim, derive_seed(config.seed, 20));
            TrainConfig train_config = config.train_config();
            train_config.verbose = verbose;
            if (train_config.checkpoint_every > 0) {
                train_config.checkpoint_dir = config.out_dir;
            }
            const TrainResult result = train(net, train_set, val_set, train_config);

            const auto ckpt_path = fs::path(config.out_dir) / "checkpoint.json";
            save_checkpoint({result.best_net, config.seed, result.best_epoch},
                            ckpt_path.string());
            write_history_csv((fs::path(config.out_dir) / "history.csv").string(),
                              result.history);
            std::cout << "trained " << result.history.size() << " epochs; best epoch "
                      << result.best_epoch << "; checkpoint -> " << ckpt_path.string()
                      << '\n';
            if (!val_set.empty()) {
                const auto& best =
                    result.history[static_cast<std::size_t>(result.best_epoch - 1)];
                std::cout << "best val_error " << best.val_error << " val_nmi "
                          << best.val_nmi << '\n';
            }
        } else if (eval_cmd->parsed()) {
            if (k_mode != "gt" && k_mode != "estimate") {
                throw InvalidSpec("--k-mode must be gt or estimate");
            }
            RunConfig config = resolve(eval_cmd, eval_opts);
            validate(config);
            echo_config(config);
            const Checkpoint ckpt = load_checkpoint(eval_ckpt);
            const auto dataset = read_dataset(eval_data);
            EvalConfig eval_config = config.eval_config(
                k_mode == "estimate" ? KMode::EstimateK : KMode::GroundTruthK);
            eval_config.model_selection = true;
            const EvalSummary summary = evaluate(ckpt.net, dataset, eval_config);
            const auto report_path = fs::path(config.out_dir) / "metrics.csv";
            write_metrics_report(report_path.string(), summary, eval_config.kmin,
                                 eval_config.kmax);
            print_summary(summary, report_path.string());
        } else if (select_cmd->parsed()) {
            RunConfig config = resolve(select_cmd, select_opts);
            validate(config);
            echo_config(config);
            const Checkpoint ckpt = load_checkpoint(select_ckpt);
            const auto dataset = read_dataset(select_data);
            EvalConfig eval_config = config.eval_config(KMode::GroundTruthK);
            eval_config.model_selection = true;
            const EvalSummary summary = evaluate(ckpt.net, dataset, eval_config);
            int sod_hits = 0, silh_hits = 0;
            for (const SampleMetrics& m : summary.per_sample) {
                if (m.k_sod == m.k_true) ++sod_hits;
                if (m.k_silh == m.k_true) ++silh_hits;
            }
            const auto report_path = fs::path(config.out_dir) / "selectk.csv";
            write_metrics_report(report_path.string(), summary, eval_config.kmin,
                                 eval_config.kmax);
            const double n = static_cast<double>(summary.per_sample.size());
            std::cout << "sod correct rate " << sod_hits / n
                      << "; silhouette correct rate " << silh_hits / n << '\n'
                      << "report -> " << report_path.string() << '\n';
        } else if (base_cmd->parsed()) {
            RunConfig config = resolve(base_cmd, base_opts);
            if (base_cmd->count("--threshold")) config.ransac.inlier_threshold = threshold;
            if (base_cmd->count("--iterations")) config.ransac.iterations = iterations;
            if (base_mode == "ho") {
                config.ransac.type_order = {"conic"};
            } else if (base_mode == "seq") {
                config.ransac.type_order = {"line", "circle", "ellipse"};
            } else {
                throw InvalidSpec("--mode must be 'seq' or 'ho'");
            }
            validate(config);
            echo_config(config);
            const auto dataset = read_dataset(base_data);
            const EvalSummary summary = baseline_eval(dataset, config.ransac_config(),
                                                      derive_seed(config.seed, 12));
            const auto report_path = fs::path(config.out_dir) / "baseline_metrics.csv";
            write_metrics_report(report_path.string(), summary, config.inference.kmin,
                                 config.inference.kmax);
            print_summary(summary, report_path.string());
        } else if (export_cmd->parsed()) {
            RunConfig config = resolve(export_cmd, export_opts);
            validate(config);
            echo_config(config);
            const Checkpoint ckpt = load_checkpoint(export_ckpt);
            const auto dataset = read_dataset(export_data);
            const auto path = fs::path(config.out_dir) / "embeddings.csv";
            write_embeddings_csv(path.string(), ckpt.net, dataset);
            std::cout << "embeddings -> " << path.string() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
