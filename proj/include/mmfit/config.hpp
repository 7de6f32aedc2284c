#pragma once

#include "mmfit/baseline.hpp"
#include "mmfit/datagen.hpp"
#include "mmfit/losses.hpp"
#include "mmfit/trainer.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>

namespace mmfit {

/// Resolved run configuration for the CLI: every knob of every stage plus the
/// master seed. Loaded from a JSON document; unknown keys are rejected.
/// Flag overrides are applied by the CLI after the file is loaded.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "out";

    struct Dataset {
        Composition composition = Composition::LCE;
        int n_train = 8000;
        int n_val = 200;
        int n_test = 200;
        int min_points = 50;
        int max_points = 100;
        double noise_sigma = 0.05;
        BoundingBox box;
        double outlier_fraction = 0.0;
        double min_radius = 0.3;
        double max_radius = 1.2;
        double min_axis = 0.3;
        double max_axis = 1.2;
        double center_margin = 0.6;
    } dataset;

    struct Net {
        int width = 128;
        int depth = 12;
        int embed_dim = 5;
    } net;

    struct Train {
        int epochs = 300;
        double lr = 1e-4;
        std::string loss = "mimi";
        double alpha = 1.0;
        double eps = 1e-8;
        bool shuffle = true;
        int checkpoint_every = 0;
    } train;

    struct Inference {
        int kmin = 1;
        int kmax = 8;
        int restarts = 10;
        int max_iters = 300;
    } inference;

    struct Ransac {
        double inlier_threshold = 0.02;
        int iterations = 500;
        int min_inliers = 10;
        std::vector<std::string> type_order = {"line", "circle", "ellipse"};
        int structure_budget = 8;
    } ransac;

    /// DatasetSpec for one split; the per-split seed is derived from the
    /// master seed (train/val/test use stream tags 1/2/3).
    DatasetSpec dataset_spec(int n_samples, std::uint64_t stream) const;
    LossSpec loss_spec() const;
    TrainConfig train_config() const;
    EvalConfig eval_config(KMode k_mode) const;
    RansacConfig ransac_config() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::string& path);
void validate(const RunConfig& config);

}  // namespace mmfit
