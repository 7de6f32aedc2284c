#include "mmfit/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace mmfit {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw InvalidSpec("unknown config key '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_box(const json& j, const char* key, BoundingBox& box) {
    if (!j.contains(key)) return;
    const auto values = j.at(key).get<std::vector<double>>();
    if (values.size() != 4) {
        throw InvalidSpec("bounding_box must be [xmin, xmax, ymin, ymax]");
    }
    box = {values[0], values[1], values[2], values[3]};
}

}  // namespace

DatasetSpec RunConfig::dataset_spec(int n_samples, std::uint64_t stream) const {
    DatasetSpec spec;
    spec.n_samples = n_samples;
    spec.composition = dataset.composition;
    spec.min_points_per_structure = dataset.min_points;
    spec.max_points_per_structure = dataset.max_points;
    spec.noise_sigma = dataset.noise_sigma;
    spec.bounding_box = dataset.box;
    spec.outlier_fraction = dataset.outlier_fraction;
    spec.min_radius = dataset.min_radius;
    spec.max_radius = dataset.max_radius;
    spec.min_axis = dataset.min_axis;
    spec.max_axis = dataset.max_axis;
    spec.center_margin = dataset.center_margin;
    spec.seed = derive_seed(seed, stream);
    return spec;
}

LossSpec RunConfig::loss_spec() const {
    return {loss_kind_from_string(train.loss), train.alpha, train.eps};
}

TrainConfig RunConfig::train_config() const {
    TrainConfig config;
    config.epochs = train.epochs;
    config.lr = train.lr;
    config.loss = loss_spec();
    config.seed = derive_seed(seed, 10);
    config.shuffle = train.shuffle;
    config.checkpoint_every = train.checkpoint_every;
    config.val_restarts = inference.restarts;
    return config;
}

EvalConfig RunConfig::eval_config(KMode k_mode) const {
    EvalConfig config;
    config.k_mode = k_mode;
    config.restarts = inference.restarts;
    config.max_iters = inference.max_iters;
    config.seed = derive_seed(seed, 11);
    config.kmin = inference.kmin;
    config.kmax = inference.kmax;
    return config;
}

RansacConfig RunConfig::ransac_config() const {
    RansacConfig config;
    config.inlier_threshold = ransac.inlier_threshold;
    config.iterations = ransac.iterations;
    config.min_inliers = ransac.min_inliers;
    config.type_order.clear();
    for (const std::string& name : ransac.type_order) {
        config.type_order.push_back(conic_kind_from_string(name));
    }
    config.structure_budget = ransac.structure_budget;
    return config;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig config;
    reject_unknown(j, {"seed", "out_dir", "dataset", "net", "train", "inference", "ransac"},
                   "top level");
    read(j, "seed", config.seed);
    read(j, "out_dir", config.out_dir);

    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        reject_unknown(d,
                       {"composition", "n_train", "n_val", "n_test", "points_per_structure",
                        "noise_sigma", "bounding_box", "outlier_fraction", "radius_range",
                        "axis_range", "center_margin"},
                       "dataset");
        if (d.contains("composition")) {
            const auto name = d.at("composition").get<std::string>();
            if (name == "lce") {
                config.dataset.composition = Composition::LCE;
            } else if (name == "lce_unmixed") {
                config.dataset.composition = Composition::LCE_Unmixed;
            } else {
                throw InvalidSpec("composition must be 'lce' or 'lce_unmixed'");
            }
        }
        read(d, "n_train", config.dataset.n_train);
        read(d, "n_val", config.dataset.n_val);
        read(d, "n_test", config.dataset.n_test);
        if (d.contains("points_per_structure")) {
            const auto range = d.at("points_per_structure").get<std::vector<int>>();
            if (range.size() != 2) {
                throw InvalidSpec("points_per_structure must be [min, max]");
            }
            config.dataset.min_points = range[0];
            config.dataset.max_points = range[1];
        }
        read(d, "noise_sigma", config.dataset.noise_sigma);
        read_box(d, "bounding_box", config.dataset.box);
        read(d, "outlier_fraction", config.dataset.outlier_fraction);
        if (d.contains("radius_range")) {
            const auto range = d.at("radius_range").get<std::vector<double>>();
            if (range.size() != 2) throw InvalidSpec("radius_range must be [min, max]");
            config.dataset.min_radius = range[0];
            config.dataset.max_radius = range[1];
        }
        if (d.contains("axis_range")) {
            const auto range = d.at("axis_range").get<std::vector<double>>();
            if (range.size() != 2) throw InvalidSpec("axis_range must be [min, max]");
            config.dataset.min_axis = range[0];
            config.dataset.max_axis = range[1];
        }
        read(d, "center_margin", config.dataset.center_margin);
    }

    if (j.contains("net")) {
        const json& n = j.at("net");
        reject_unknown(n, {"width", "depth", "embed_dim"}, "net");
        read(n, "width", config.net.width);
        read(n, "depth", config.net.depth);
        read(n, "embed_dim", config.net.embed_dim);
    }

    if (j.contains("train")) {
        const json& t = j.at("train");
        reject_unknown(t, {"epochs", "lr", "loss", "alpha", "eps", "shuffle",
                           "checkpoint_every"},
                       "train");
        read(t, "epochs", config.train.epochs);
        read(t, "lr", config.train.lr);
        read(t, "loss", config.train.loss);
        read(t, "alpha", config.train.alpha);
        read(t, "eps", config.train.eps);
        read(t, "shuffle", config.train.shuffle);
        read(t, "checkpoint_every", config.train.checkpoint_every);
    }

    if (j.contains("inference")) {
        const json& i = j.at("inference");
        reject_unknown(i, {"kmin", "kmax", "restarts", "max_iters"}, "inference");
        read(i, "kmin", config.inference.kmin);
        read(i, "kmax", config.inference.kmax);
        read(i, "restarts", config.inference.restarts);
        read(i, "max_iters", config.inference.max_iters);
    }

    if (j.contains("ransac")) {
        const json& r = j.at("ransac");
        reject_unknown(r,
                       {"inlier_threshold", "iterations", "min_inliers", "type_order",
                        "structure_budget"},
                       "ransac");
        read(r, "inlier_threshold", config.ransac.inlier_threshold);
        read(r, "iterations", config.ransac.iterations);
        read(r, "min_inliers", config.ransac.min_inliers);
        read(r, "type_order", config.ransac.type_order);
        read(r, "structure_budget", config.ransac.structure_budget);
    }

    validate(config);
    return config;
}

nlohmann::json run_config_to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["dataset"] = {
        {"composition", c.dataset.composition == Composition::LCE ? "lce" : "lce_unmixed"},
        {"n_train", c.dataset.n_train},
        {"n_val", c.dataset.n_val},
        {"n_test", c.dataset.n_test},
        {"points_per_structure", {c.dataset.min_points, c.dataset.max_points}},
        {"noise_sigma", c.dataset.noise_sigma},
        {"bounding_box",
         {c.dataset.box.xmin, c.dataset.box.xmax, c.dataset.box.ymin, c.dataset.box.ymax}},
        {"outlier_fraction", c.dataset.outlier_fraction},
        {"radius_range", {c.dataset.min_radius, c.dataset.max_radius}},
        {"axis_range", {c.dataset.min_axis, c.dataset.max_axis}},
        {"center_margin", c.dataset.center_margin},
    };
    j["net"] = {
        {"width", c.net.width}, {"depth", c.net.depth}, {"embed_dim", c.net.embed_dim}};
    j["train"] = {
        {"epochs", c.train.epochs},     {"lr", c.train.lr},
        {"loss", c.train.loss},         {"alpha", c.train.alpha},
        {"eps", c.train.eps},           {"shuffle", c.train.shuffle},
        {"checkpoint_every", c.train.checkpoint_every},
    };
    j["inference"] = {
        {"kmin", c.inference.kmin},
        {"kmax", c.inference.kmax},
        {"restarts", c.inference.restarts},
        {"max_iters", c.inference.max_iters},
    };
    j["ransac"] = {
        {"inlier_threshold", c.ransac.inlier_threshold},
        {"iterations", c.ransac.iterations},
        {"min_inliers", c.ransac.min_inliers},
        {"type_order", c.ransac.type_order},
        {"structure_budget", c.ransac.structure_budget},
    };
    return j;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw FormatError("config is not valid JSON: " + path);
    return run_config_from_json(j);
}

void validate(const RunConfig& c) {
    if (c.dataset.n_train < 1 || c.dataset.n_val < 0 || c.dataset.n_test < 0) {
        throw InvalidSpec("dataset split sizes are invalid");
    }
    if (c.dataset.min_points < 1 || c.dataset.max_points < c.dataset.min_points) {
        throw InvalidSpec("points_per_structure range is invalid");
    }
    if (c.dataset.noise_sigma < 0.0) throw InvalidSpec("noise_sigma must be >= 0");
    if (c.net.width < 1 || c.net.depth < 0 || c.net.embed_dim < 1) {
        throw InvalidSpec("net dimensions are invalid");
    }
    if (c.train.epochs < 1) throw InvalidSpec("epochs must be >= 1");
    if (!(c.train.lr > 0.0)) throw InvalidSpec("lr must be > 0");
    if (!(c.train.alpha > 0.0) || !(c.train.eps > 0.0)) {
        throw InvalidSpec("alpha and eps must be > 0");
    }
    loss_kind_from_string(c.train.loss);
    if (c.inference.kmin < 1 || c.inference.kmax < c.inference.kmin) {
        throw InvalidSpec("inference K range is invalid");
    }
    if (c.inference.restarts < 1 || c.inference.max_iters < 1) {
        throw InvalidSpec("inference restarts/max_iters must be >= 1");
    }
    if (!(c.ransac.inlier_threshold > 0.0) || c.ransac.iterations < 1 ||
        c.ransac.min_inliers < 1 || c.ransac.structure_budget < 1) {
        throw InvalidSpec("ransac config is invalid");
    }
    for (const std::string& name : c.ransac.type_order) {
        conic_kind_from_string(name);
    }
}

}  // namespace mmfit
