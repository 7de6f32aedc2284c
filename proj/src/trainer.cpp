#include "mmfit/trainer.hpp"

#include "mmfit/inference.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

namespace mmfit {

AdamState make_adam_state(Eigen::Index n_params, double lr) {
    AdamState state;
    state.m = Vector::Zero(n_params);
    state.v = Vector::Zero(n_params);
    state.lr = lr;
    return state;
}

void adam_step(AdamState& state, Vector& params, const Vector& grads) {
    if (params.size() != state.m.size() || grads.size() != state.m.size()) {
        throw ShapeMismatch("adam_step: parameter/gradient shape mismatch");
    }
    ++state.t;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    params.array() -= state.lr * (state.m.array() / bc1) /
                      ((state.v.array() / bc2).sqrt() + state.eps);
}

namespace {

// Seed streams inside one training run.
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kValStream = 2;

double validation_error(const EmbedNet& net, const std::vector<Sample>& val_set,
                        const TrainConfig& config, int epoch, double* out_nmi) {
    EvalConfig eval_config;
    eval_config.k_mode = KMode::GroundTruthK;
    eval_config.restarts = config.val_restarts;
    eval_config.seed = derive_seed(derive_seed(config.seed, kValStream),
                                   static_cast<std::uint64_t>(epoch));
    const EvalSummary summary = evaluate(net, val_set, eval_config);
    if (out_nmi) *out_nmi = summary.mean_nmi;
    return summary.mean_error;
}

}  // namespace

TrainResult train(EmbedNet& net, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainConfig& config) {
    if (train_set.empty()) throw InvalidSpec("training set is empty");
    if (config.epochs < 1) throw InvalidSpec("epochs must be >= 1");
    if (!(config.lr > 0.0)) throw InvalidSpec("learning rate must be positive");
    for (const Sample& sample : train_set) {
        if (sample.K < 2) {
            throw InvalidSpec("sample " + sample.id + " has K < 2");
        }
    }

    Vector params = flatten_params(net);
    AdamState adam = make_adam_state(params.size(), config.lr);
    int start_epoch = 1;
    if (!config.resume_from.empty()) {
        TrainCheckpoint ckpt = load_train_checkpoint(config.resume_from);
        net = std::move(ckpt.net);
        params = flatten_params(net);
        if (ckpt.adam_m.size() != params.size()) {
            throw FormatError("resume checkpoint does not match net architecture");
        }
        adam.m = std::move(ckpt.adam_m);
        adam.v = std::move(ckpt.adam_v);
        adam.t = ckpt.adam_t;
        start_epoch = ckpt.epoch + 1;
    }

    TrainResult result;
    double best_error = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = start_epoch; epoch <= config.epochs; ++epoch) {
        if (config.shuffle) {
            // The permutation is a pure function of (seed, epoch) so a
            // resumed run walks the same order.
            std::iota(order.begin(), order.end(), 0);
            Rng shuffle_rng(derive_seed(derive_seed(config.seed, kShuffleStream),
                                        static_cast<std::uint64_t>(epoch)));
            std::shuffle(order.begin(), order.end(), shuffle_rng);
        }

        double loss_sum = 0.0;
        int processed = 0;
        for (std::size_t index : order) {
            const Sample& sample = train_set[index];
            ForwardCache cache;
            forward(net, sample.points, &cache);
            LossResult loss;
            try {
                loss = loss_variant(config.loss, cache.z, sample.labels);
            } catch (const EmptyCluster& e) {
                std::cerr << "warning: skipping sample " << sample.id << ": " << e.what()
                          << '\n';
                continue;
            }
            const ParamGrads grads = backward(net, cache, loss.grad);
            adam_step(adam, params, flatten_grads(grads));
            set_params(net, params);
            loss_sum += loss.value;
            ++processed;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = processed > 0 ? loss_sum / processed
                                         : std::numeric_limits<double>::quiet_NaN();
        if (!val_set.empty()) {
            stats.val_error = validation_error(net, val_set, config, epoch, &stats.val_nmi);
            if (stats.val_error < best_error) {
                best_error = stats.val_error;
                result.best_epoch = epoch;
                result.best_net = net;
            }
        }
        result.history.push_back(stats);
        if (config.verbose) {
            std::cerr << "epoch " << epoch << " loss " << stats.train_loss;
            if (!val_set.empty()) {
                std::cerr << " val_error " << stats.val_error << " val_nmi " << stats.val_nmi;
            }
            std::cerr << '\n';
        }

        if (config.checkpoint_every > 0 && !config.checkpoint_dir.empty() &&
            epoch % config.checkpoint_every == 0) {
            const auto path = std::filesystem::path(config.checkpoint_dir) /
                              ("checkpoint_epoch_" + std::to_string(epoch) + ".json");
            save_train_checkpoint(path.string(), net, adam, epoch, config.seed);
        }
    }

    if (val_set.empty() || result.best_epoch == 0) {
        result.best_epoch = config.epochs;
        result.best_net = net;
    }
    return result;
}

void save_train_checkpoint(const std::string& path, const EmbedNet& net,
                           const AdamState& adam, int epoch, std::uint64_t seed) {
    // Net checkpoint first, then splice in the optimizer accumulators.
    save_checkpoint({net, seed, epoch}, path);
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in);
    in.close();
    j["adam"] = {
        {"m", std::vector<double>(adam.m.data(), adam.m.data() + adam.m.size())},
        {"v", std::vector<double>(adam.v.data(), adam.v.data() + adam.v.size())},
        {"t", adam.t},
    };
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

TrainCheckpoint load_train_checkpoint(const std::string& path) {
    Checkpoint base = load_checkpoint(path);
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (!j.contains("adam")) {
        throw FormatError("not a training checkpoint (no optimizer state): " + path);
    }
    TrainCheckpoint ckpt;
    ckpt.net = std::move(base.net);
    ckpt.epoch = base.epoch;
    ckpt.seed = base.seed;
    const auto m = j["adam"].at("m").get<std::vector<double>>();
    const auto v = j["adam"].at("v").get<std::vector<double>>();
    ckpt.adam_m = Eigen::Map<const Vector>(m.data(), static_cast<Eigen::Index>(m.size()));
    ckpt.adam_v = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    ckpt.adam_t = j["adam"].at("t").get<long>();
    return ckpt;
}

namespace {

constexpr std::uint64_t kEvalClusterStream = 1;
constexpr std::uint64_t kEvalCurveStream = 2;
constexpr std::uint64_t kEvalSilhStream = 3;

}  // namespace

EvalSummary evaluate(const EmbedNet& net, const std::vector<Sample>& dataset,
                     const EvalConfig& config) {
    EvalSummary summary;
    summary.per_sample.reserve(dataset.size());
    const bool select = config.model_selection || config.k_mode == KMode::EstimateK;

    for (std::size_t idx = 0; idx < dataset.size(); ++idx) {
        const Sample& sample = dataset[idx];
        const Matrix z = forward(net, sample.points);

        SampleMetrics metrics;
        metrics.id = sample.id;
        metrics.k_true = sample.K;

        if (select) {
            const int kmax = std::min<int>(config.kmax, static_cast<int>(z.rows()));
            const ResidualCurve curve = residual_curve(
                z, config.kmin, kmax, config.restarts,
                derive_seed(derive_seed(config.seed, kEvalCurveStream),
                            static_cast<std::uint64_t>(idx)),
                config.max_iters);
            metrics.residuals = curve.values;
            metrics.k_sod = select_k_sod(curve);
            metrics.k_silh = select_k_silhouette(
                z, config.kmin, kmax, config.restarts,
                derive_seed(derive_seed(config.seed, kEvalSilhStream),
                            static_cast<std::uint64_t>(idx)),
                config.max_iters);
        }

        const int k = config.k_mode == KMode::GroundTruthK ? sample.K : metrics.k_sod;
        const ClusterResult clusters =
            kmeans(z, k, config.restarts,
                   derive_seed(derive_seed(config.seed, kEvalClusterStream),
                               static_cast<std::uint64_t>(idx)),
                   config.max_iters);
        metrics.error = error_rate(clusters.assignments, sample.labels);
        metrics.nmi_value = nmi(clusters.assignments, sample.labels);
        summary.per_sample.push_back(std::move(metrics));
    }

    finalize_summary(summary);
    return summary;
}

void finalize_summary(EvalSummary& summary) {
    summary.mean_error = 0.0;
    summary.mean_nmi = 0.0;
    summary.median_error = 0.0;
    if (summary.per_sample.empty()) return;
    std::vector<double> errors;
    errors.reserve(summary.per_sample.size());
    for (const SampleMetrics& m : summary.per_sample) {
        summary.mean_error += m.error;
        summary.mean_nmi += m.nmi_value;
        errors.push_back(m.error);
    }
    summary.mean_error /= static_cast<double>(errors.size());
    summary.mean_nmi /= static_cast<double>(errors.size());
    std::sort(errors.begin(), errors.end());
    const std::size_t mid = errors.size() / 2;
    summary.median_error = errors.size() % 2 == 1
                               ? errors[mid]
                               : 0.5 * (errors[mid - 1] + errors[mid]);
}

}  // namespace mmfit
