#include "mmfit/net.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace mmfit {

namespace {

constexpr double kContextNormEps = 1e-8;
constexpr double kRowNormEps = 1e-30;

Linear init_linear(int out, int in, double weight_std, Rng& rng) {
    std::normal_distribution<double> dist(0.0, weight_std);
    Linear layer;
    layer.weight.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) {
            layer.weight(r, c) = dist(rng);
        }
    }
    layer.bias = Vector::Zero(out);
    return layer;
}

Linear zeros_like(const Linear& layer) {
    return {Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
            Vector::Zero(layer.bias.size())};
}

}  // namespace

EmbedNet init_net(int input_dim, int width, int depth, int embed_dim,
                  std::uint64_t seed) {
    if (input_dim < 1 || width < 1 || depth < 0 || embed_dim < 1) {
        throw InvalidSpec("net dimensions must be positive (depth may be 0)");
    }
    Rng rng(seed);
    EmbedNet net;
    net.input_dim = input_dim;
    net.width = width;
    net.depth = depth;
    net.embed_dim = embed_dim;
    int in = input_dim;
    for (int b = 0; b < depth; ++b) {
        net.blocks.push_back(init_linear(width, in, std::sqrt(2.0 / in), rng));
        in = width;
    }
    net.out_proj = init_linear(embed_dim, in, std::sqrt(1.0 / in), rng);
    net.revision = 1;
    return net;
}

Matrix forward(const EmbedNet& net, const Matrix& points, ForwardCache* cache) {
    if (points.cols() != net.input_dim) {
        throw DimensionMismatch("input has " + std::to_string(points.cols()) +
                                " columns, net expects " + std::to_string(net.input_dim));
    }
    if (points.rows() < 2) {
        throw DimensionMismatch("context normalization needs at least 2 points");
    }
    const Eigen::Index n = points.rows();

    if (cache) {
        cache->input = points;
        cache->blocks.clear();
        cache->blocks.reserve(net.blocks.size());
        cache->revision = net.revision;
    }

    Matrix h = points;
    for (const Linear& block : net.blocks) {
        Matrix lin = h * block.weight.transpose();
        lin.rowwise() += block.bias.transpose();

        const Eigen::RowVectorXd mean = lin.colwise().mean();
        const Eigen::RowVectorXd var =
            (lin.rowwise() - mean).array().square().colwise().mean().matrix();
        const Eigen::RowVectorXd inv_std =
            (var.array() + kContextNormEps).sqrt().inverse().matrix();

        Matrix norm =
            ((lin.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
        Matrix out = norm.cwiseMax(0.0);
        if (h.cols() == out.cols()) {
            out += h;
        }
        if (cache) {
            cache->blocks.push_back({std::move(lin), norm, inv_std, out});
        }
        h = std::move(out);
    }

    Matrix u = h * net.out_proj.weight.transpose();
    u.rowwise() += net.out_proj.bias.transpose();

    Matrix z(n, net.embed_dim);
    Vector row_scale(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        row_scale(i) = 1.0 / std::sqrt(u.row(i).squaredNorm() + kRowNormEps);
        z.row(i) = u.row(i) * row_scale(i);
    }
    if (cache) {
        cache->pre_norm = std::move(u);
        cache->z = z;
        cache->row_scale = std::move(row_scale);
    }
    return z;
}

ParamGrads backward(const EmbedNet& net, const ForwardCache& cache,
                    const Matrix& grad_wrt_embedding) {
    if (cache.revision != net.revision) {
        throw StaleCache("forward cache does not match current parameters");
    }
    if (grad_wrt_embedding.rows() != cache.z.rows() ||
        grad_wrt_embedding.cols() != cache.z.cols()) {
        throw DimensionMismatch("upstream gradient shape does not match embedding");
    }
    if (static_cast<std::size_t>(net.blocks.size()) != cache.blocks.size()) {
        throw StaleCache("forward cache depth does not match net");
    }

    const Eigen::Index n = cache.z.rows();

    ParamGrads grads;
    grads.blocks.reserve(net.blocks.size());
    for (const Linear& block : net.blocks) {
        grads.blocks.push_back(zeros_like(block));
    }
    grads.out_proj = zeros_like(net.out_proj);

    // Row L2 normalization: z = u / sqrt(|u|^2 + eps)
    Matrix gu(n, net.embed_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double dot = grad_wrt_embedding.row(i).dot(cache.z.row(i));
        gu.row(i) =
            (grad_wrt_embedding.row(i) - dot * cache.z.row(i)) * cache.row_scale(i);
    }

    const Matrix& proj_in =
        net.blocks.empty() ? cache.input : cache.blocks.back().out;
    grads.out_proj.weight = gu.transpose() * proj_in;
    grads.out_proj.bias = gu.colwise().sum();
    Matrix g = gu * net.out_proj.weight;  // gradient w.r.t. block stack output

    for (int b = static_cast<int>(net.blocks.size()) - 1; b >= 0; --b) {
        const BlockCache& bc = cache.blocks[static_cast<std::size_t>(b)];
        const Matrix& block_in = b == 0 ? cache.input : cache.blocks[static_cast<std::size_t>(b - 1)].out;
        const bool residual = block_in.cols() == bc.out.cols();

        // ReLU
        Matrix gr = (bc.norm.array() > 0.0).select(g, 0.0);

        // Context normalization (population statistics, no affine):
        // dx = inv_std * (gy - mean(gy) - y * mean(gy .* y)) per channel.
        const Eigen::RowVectorXd gmean = gr.colwise().mean();
        const Eigen::RowVectorXd gymean = gr.cwiseProduct(bc.norm).colwise().mean();
        Matrix glin = (((gr.rowwise() - gmean).array() -
                        bc.norm.array().rowwise() * gymean.array())
                           .rowwise() *
                       bc.inv_std.array())
                          .matrix();

        Linear& bg = grads.blocks[static_cast<std::size_t>(b)];
        bg.weight = glin.transpose() * block_in;
        bg.bias = glin.colwise().sum();

        Matrix gin = glin * net.blocks[static_cast<std::size_t>(b)].weight;
        if (residual) gin += g;
        g = std::move(gin);
    }
    return grads;
}

std::size_t param_count(const EmbedNet& net) {
    std::size_t count = 0;
    for (const Linear& block : net.blocks) {
        count += static_cast<std::size_t>(block.weight.size() + block.bias.size());
    }
    count += static_cast<std::size_t>(net.out_proj.weight.size() + net.out_proj.bias.size());
    return count;
}

namespace {

template <typename Fn>
void for_each_layer(const EmbedNet& net, Fn&& fn) {
    for (const Linear& block : net.blocks) fn(block);
    fn(net.out_proj);
}

}  // namespace

Vector flatten_params(const EmbedNet& net) {
    Vector flat(static_cast<Eigen::Index>(param_count(net)));
    Eigen::Index at = 0;
    for_each_layer(net, [&](const Linear& layer) {
        flat.segment(at, layer.weight.size()) =
            Eigen::Map<const Vector>(layer.weight.data(), layer.weight.size());
        at += layer.weight.size();
        flat.segment(at, layer.bias.size()) = layer.bias;
        at += layer.bias.size();
    });
    return flat;
}

Vector flatten_grads(const ParamGrads& grads) {
    Eigen::Index total = 0;
    for (const Linear& block : grads.blocks) total += block.weight.size() + block.bias.size();
    total += grads.out_proj.weight.size() + grads.out_proj.bias.size();
    Vector flat(total);
    Eigen::Index at = 0;
    auto put = [&](const Linear& layer) {
        flat.segment(at, layer.weight.size()) =
            Eigen::Map<const Vector>(layer.weight.data(), layer.weight.size());
        at += layer.weight.size();
        flat.segment(at, layer.bias.size()) = layer.bias;
        at += layer.bias.size();
    };
    for (const Linear& block : grads.blocks) put(block);
    put(grads.out_proj);
    return flat;
}

void set_params(EmbedNet& net, const Vector& flat) {
    if (static_cast<std::size_t>(flat.size()) != param_count(net)) {
        throw ShapeMismatch("flat parameter vector has the wrong length");
    }
    Eigen::Index at = 0;
    auto take = [&](Linear& layer) {
        Eigen::Map<Vector>(layer.weight.data(), layer.weight.size()) =
            flat.segment(at, layer.weight.size());
        at += layer.weight.size();
        layer.bias = flat.segment(at, layer.bias.size());
        at += layer.bias.size();
    };
    for (Linear& block : net.blocks) take(block);
    take(net.out_proj);
    ++net.revision;
}

namespace {

using nlohmann::json;

json linear_to_json(const Linear& layer) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
            row.push_back(layer.weight(r, c));
        }
        rows.push_back(std::move(row));
    }
    return {{"weight", std::move(rows)},
            {"bias", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())}};
}

Linear linear_from_json(const json& j) {
    const auto& rows = j.at("weight");
    const auto bias = j.at("bias").get<std::vector<double>>();
    Linear layer;
    layer.weight.resize(static_cast<Eigen::Index>(rows.size()),
                        rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != layer.weight.cols()) {
            throw FormatError("ragged weight matrix in checkpoint");
        }
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            layer.weight(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                rows[r][c].get<double>();
        }
    }
    layer.bias = Eigen::Map<const Vector>(bias.data(), static_cast<Eigen::Index>(bias.size()));
    return layer;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json j;
    j["format_version"] = 1;
    j["input_dim"] = ckpt.net.input_dim;
    j["width"] = ckpt.net.width;
    j["depth"] = ckpt.net.depth;
    j["embed_dim"] = ckpt.net.embed_dim;
    j["seed"] = ckpt.seed;
    j["epoch"] = ckpt.epoch;
    json blocks = json::array();
    for (const Linear& block : ckpt.net.blocks) blocks.push_back(linear_to_json(block));
    j["blocks"] = std::move(blocks);
    j["out_proj"] = linear_to_json(ckpt.net.out_proj);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw FormatError("checkpoint is not valid JSON: " + path);
    try {
        if (j.at("format_version").get<int>() != 1) {
            throw FormatError("unsupported checkpoint format version");
        }
        Checkpoint ckpt;
        ckpt.net.input_dim = j.at("input_dim").get<int>();
        ckpt.net.width = j.at("width").get<int>();
        ckpt.net.depth = j.at("depth").get<int>();
        ckpt.net.embed_dim = j.at("embed_dim").get<int>();
        ckpt.seed = j.at("seed").get<std::uint64_t>();
        ckpt.epoch = j.at("epoch").get<int>();
        for (const auto& b : j.at("blocks")) {
            ckpt.net.blocks.push_back(linear_from_json(b));
        }
        ckpt.net.out_proj = linear_from_json(j.at("out_proj"));
        ckpt.net.revision = 1;
        if (static_cast<int>(ckpt.net.blocks.size()) != ckpt.net.depth) {
            throw FormatError("checkpoint depth does not match block count");
        }
        return ckpt;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed checkpoint: ") + e.what());
    }
}

}  // namespace mmfit
