#include "mmfit/datagen.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mmfit {

namespace {

using nlohmann::json;

void validate_spec(const DatasetSpec& spec) {
    if (spec.n_samples < 1) throw InvalidSpec("n_samples must be >= 1");
    if (spec.noise_sigma < 0.0) throw InvalidSpec("noise_sigma must be >= 0");
    if (spec.min_points_per_structure < 1 ||
        spec.max_points_per_structure < spec.min_points_per_structure) {
        throw InvalidSpec("points_per_structure range is invalid");
    }
    if (!(spec.bounding_box.xmin < spec.bounding_box.xmax) ||
        !(spec.bounding_box.ymin < spec.bounding_box.ymax)) {
        throw InvalidSpec("bounding box is empty");
    }
    if (spec.outlier_fraction < 0.0) throw InvalidSpec("outlier_fraction must be >= 0");
    if (!(spec.min_radius > 0.0) || spec.max_radius < spec.min_radius ||
        !(spec.min_axis > 0.0) || spec.max_axis < spec.min_axis) {
        throw InvalidSpec("radius/axis ranges are invalid");
    }
}

Point2 random_center(const DatasetSpec& spec, Rng& rng) {
    const BoundingBox& b = spec.bounding_box;
    const double m = spec.center_margin;
    std::uniform_real_distribution<double> ux(b.xmin + m, b.xmax - m);
    std::uniform_real_distribution<double> uy(b.ymin + m, b.ymax - m);
    return {ux(rng), uy(rng)};
}

ConicModel random_structure(ConicKind kind, const DatasetSpec& spec, Rng& rng) {
    switch (kind) {
        case ConicKind::Line: {
            const Point2 p = random_center(spec, rng);
            std::uniform_real_distribution<double> ua(0.0, std::numbers::pi);
            const double theta = ua(rng);
            // normal perpendicular to the direction theta
            const double nx = -std::sin(theta);
            const double ny = std::cos(theta);
            return ConicModel::line(nx, ny, -(nx * p.x + ny * p.y));
        }
        case ConicKind::Circle: {
            const Point2 c = random_center(spec, rng);
            std::uniform_real_distribution<double> ur(spec.min_radius, spec.max_radius);
            return ConicModel::circle(c, ur(rng));
        }
        case ConicKind::Ellipse: {
            const Point2 c = random_center(spec, rng);
            std::uniform_real_distribution<double> ua(spec.min_axis, spec.max_axis);
            std::uniform_real_distribution<double> ut(0.0, std::numbers::pi);
            const double a = ua(rng);
            const double b = ua(rng);
            return ConicModel::ellipse(c, a, b, ut(rng));
        }
        case ConicKind::GeneralConic: break;
    }
    throw InvalidSpec("cannot generate a structure of kind 'conic'");
}

Sample make_sample(const std::vector<ConicKind>& kinds, const DatasetSpec& spec,
                   std::uint64_t sample_seed, const std::string& id) {
    Rng rng(sample_seed);

    std::vector<ConicModel> structures;
    structures.reserve(kinds.size());
    for (ConicKind kind : kinds) {
        ConicModel model;
        int attempts = 0;
        for (;;) {
            model = random_structure(kind, spec, rng);
            bool distinct = true;
            for (const auto& other : structures) {
                if (coeff_distance(model.coeffs, other.coeffs) < 1e-3) {
                    distinct = false;
                    break;
                }
            }
            if (distinct) break;
            if (++attempts > 100) {
                throw InvalidSpec("failed to place pairwise distinct structures");
            }
        }
        structures.push_back(model);
    }

    std::uniform_int_distribution<int> un(spec.min_points_per_structure,
                                          spec.max_points_per_structure);
    std::vector<std::vector<Point2>> clouds;
    Eigen::Index total = 0;
    for (const auto& model : structures) {
        const int n = un(rng);
        const std::uint64_t curve_seed = rng();
        clouds.push_back(
            sample_curve(model, n, spec.noise_sigma, curve_seed, spec.bounding_box));
        total += n;
    }

    const int n_outliers =
        static_cast<int>(std::lround(spec.outlier_fraction * static_cast<double>(total)));

    Sample sample;
    sample.id = id;
    sample.K = static_cast<int>(structures.size()) + (n_outliers > 0 ? 1 : 0);
    sample.points.resize(total + n_outliers, 2);
    sample.labels.reserve(static_cast<std::size_t>(total + n_outliers));
    Eigen::Index row = 0;
    for (std::size_t s = 0; s < clouds.size(); ++s) {
        for (const Point2& p : clouds[s]) {
            sample.points.row(row++) << p.x, p.y;
            sample.labels.push_back(static_cast<int>(s));
        }
        sample.meta.push_back({structures[s].kind, structures[s].coeffs});
    }
    if (n_outliers > 0) {
        const BoundingBox& b = spec.bounding_box;
        std::uniform_real_distribution<double> ux(b.xmin, b.xmax);
        std::uniform_real_distribution<double> uy(b.ymin, b.ymax);
        for (int i = 0; i < n_outliers; ++i) {
            sample.points.row(row++) << ux(rng), uy(rng);
            sample.labels.push_back(static_cast<int>(structures.size()));
        }
    }
    return sample;
}

json sample_to_json(const Sample& sample) {
    json j;
    j["id"] = sample.id;
    j["K"] = sample.K;
    json pts = json::array();
    for (Eigen::Index i = 0; i < sample.points.rows(); ++i) {
        pts.push_back({sample.points(i, 0), sample.points(i, 1)});
    }
    j["points"] = std::move(pts);
    j["labels"] = sample.labels;
    json meta = json::array();
    for (const auto& m : sample.meta) {
        json entry;
        entry["kind"] = to_string(m.kind);
        entry["coeffs"] = std::vector<double>(m.coeffs.data(), m.coeffs.data() + 6);
        meta.push_back(std::move(entry));
    }
    j["meta"] = std::move(meta);
    return j;
}

Sample sample_from_json(const json& j, int line_no) {
    auto fail = [line_no](const std::string& what) -> FormatError {
        return FormatError("line " + std::to_string(line_no) + ": " + what);
    };
    try {
        Sample s;
        s.id = j.at("id").get<std::string>();
        s.K = j.at("K").get<int>();
        const auto& pts = j.at("points");
        s.points.resize(static_cast<Eigen::Index>(pts.size()), 2);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (pts[i].size() != 2) throw fail("point is not an [x, y] pair");
            s.points(static_cast<Eigen::Index>(i), 0) = pts[i][0].get<double>();
            s.points(static_cast<Eigen::Index>(i), 1) = pts[i][1].get<double>();
        }
        s.labels = j.at("labels").get<std::vector<int>>();
        if (static_cast<Eigen::Index>(s.labels.size()) != s.points.rows()) {
            throw fail("labels length does not match point count");
        }
        for (int label : s.labels) {
            if (label < 0 || label >= s.K) throw fail("label out of range [0, K)");
        }
        for (const auto& entry : j.at("meta")) {
            StructureMeta m;
            m.kind = conic_kind_from_string(entry.at("kind").get<std::string>());
            const auto coeffs = entry.at("coeffs").get<std::vector<double>>();
            if (coeffs.size() != 6) throw fail("meta coeffs must have 6 entries");
            for (int c = 0; c < 6; ++c) m.coeffs(c) = coeffs[static_cast<std::size_t>(c)];
            s.meta.push_back(m);
        }
        return s;
    } catch (const json::exception& e) {
        throw fail(e.what());
    }
}

}  // namespace

std::vector<Sample> generate_lce(const DatasetSpec& spec) {
    if (spec.composition != Composition::LCE) {
        throw InvalidSpec("generate_lce requires composition = LCE");
    }
    validate_spec(spec);
    const std::vector<ConicKind> kinds = {ConicKind::Line, ConicKind::Circle,
                                          ConicKind::Ellipse, ConicKind::Ellipse};
    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(spec.n_samples));
    for (int i = 0; i < spec.n_samples; ++i) {
        samples.push_back(make_sample(kinds, spec, derive_seed(spec.seed, static_cast<std::uint64_t>(i)),
                                      "lce-" + std::to_string(i)));
    }
    return samples;
}

std::vector<Sample> generate_lce_unmixed(const DatasetSpec& spec) {
    if (spec.composition != Composition::LCE_Unmixed) {
        throw InvalidSpec("generate_lce_unmixed requires composition = LCE_Unmixed");
    }
    validate_spec(spec);
    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(spec.n_samples));
    for (int i = 0; i < spec.n_samples; ++i) {
        const std::uint64_t sample_seed = derive_seed(spec.seed, static_cast<std::uint64_t>(i));
        Rng rng(sample_seed);
        static constexpr ConicKind kKinds[3] = {ConicKind::Line, ConicKind::Circle,
                                                ConicKind::Ellipse};
        std::uniform_int_distribution<int> uk(0, 2);
        std::uniform_int_distribution<int> uc(2, 4);
        const ConicKind kind = kKinds[uk(rng)];
        const int count = uc(rng);
        const std::vector<ConicKind> kinds(static_cast<std::size_t>(count), kind);
        samples.push_back(
            make_sample(kinds, spec, rng(), "lceu-" + std::to_string(i)));
    }
    return samples;
}

std::vector<Sample> generate(const DatasetSpec& spec) {
    return spec.composition == Composition::LCE ? generate_lce(spec)
                                                : generate_lce_unmixed(spec);
}

void write_dataset(const std::vector<Sample>& samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const Sample& s : samples) {
        out << sample_to_json(s).dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<Sample> read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<Sample> samples;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw FormatError("line " + std::to_string(line_no) + ": invalid JSON");
        }
        samples.push_back(sample_from_json(j, line_no));
    }
    return samples;
}

}  // namespace mmfit
