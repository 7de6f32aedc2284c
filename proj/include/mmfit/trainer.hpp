#pragma once

#include "mmfit/common.hpp"
#include "mmfit/datagen.hpp"
#include "mmfit/losses.hpp"
#include "mmfit/net.hpp"

#include <limits>
#include <string>
#include <vector>

namespace mmfit {

struct AdamState {
    Vector m;  // first-moment accumulator
    Vector v;  // second-moment accumulator
    long t = 0;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam_state(Eigen::Index n_params, double lr);

/// Standard Adam update with bias-corrected moments, in place.
void adam_step(AdamState& state, Vector& params, const Vector& grads);

struct TrainConfig {
    int epochs = 300;
    double lr = 1e-4;
    LossSpec loss;
    std::uint64_t seed = 0;
    bool shuffle = true;
    int checkpoint_every = 0;    // periodic training checkpoints; 0 disables
    std::string checkpoint_dir;  // used when checkpoint_every > 0
    std::string resume_from;     // training checkpoint to continue from
    int val_restarts = 10;       // k-means restarts for validation metrics
    bool verbose = false;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_error = std::numeric_limits<double>::quiet_NaN();
    double val_nmi = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = 0;   // lowest validation error; last epoch without a val set
    EmbedNet best_net;
};

/// One optimizer step per sample (mini-batch of one), epochs passes over the
/// training set with seed-derived shuffling. Per-epoch validation reports the
/// mean classification error and NMI at ground-truth K. Samples whose loss
/// degenerates (empty cluster) are skipped with a warning.
TrainResult train(EmbedNet& net, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainConfig& config);

/// Training checkpoint: net checkpoint plus optimizer accumulators, so a
/// resumed run continues the exact trajectory.
void save_train_checkpoint(const std::string& path, const EmbedNet& net,
                           const AdamState& adam, int epoch, std::uint64_t seed);

struct TrainCheckpoint {
    EmbedNet net;
    Vector adam_m;
    Vector adam_v;
    long adam_t = 0;
    int epoch = 0;
    std::uint64_t seed = 0;
};

TrainCheckpoint load_train_checkpoint(const std::string& path);

enum class KMode { GroundTruthK, EstimateK };

struct EvalConfig {
    KMode k_mode = KMode::GroundTruthK;
    int restarts = 10;
    int max_iters = 300;
    std::uint64_t seed = 0;
    /// Also run model selection (residual curve, SOD, silhouette) per sample.
    /// Implied by KMode::EstimateK, which clusters at the SOD estimate.
    bool model_selection = false;
    int kmin = 1;
    int kmax = 8;
};

struct SampleMetrics {
    std::string id;
    int k_true = 0;
    int k_sod = -1;
    int k_silh = -1;
    double error = 0.0;
    double nmi_value = 0.0;
    std::vector<double> residuals;  // r(kmin..kmax), empty without model selection
};

struct EvalSummary {
    double mean_error = 0.0;
    double median_error = 0.0;
    double mean_nmi = 0.0;
    std::vector<SampleMetrics> per_sample;
};

EvalSummary evaluate(const EmbedNet& net, const std::vector<Sample>& dataset,
                     const EvalConfig& config);

/// Fill the aggregate fields from per_sample.
void finalize_summary(EvalSummary& summary);

}  // namespace mmfit
