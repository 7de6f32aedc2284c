#pragma once

#include "mmfit/common.hpp"

#include <string>
#include <vector>

namespace mmfit {

struct Linear {
    Matrix weight;  // out x in
    Vector bias;    // out
};

/// Point-wise embedding network: cascaded blocks of a shared per-point linear
/// map, context normalization across the sample's points, ReLU, and an
/// identity skip when widths match, followed by a linear projection to
/// embed_dim and per-row L2 normalization.
struct EmbedNet {
    int input_dim = 2;
    int width = 128;
    int depth = 12;
    int embed_dim = 5;
    std::vector<Linear> blocks;  // depth entries; blocks[0] maps input_dim -> width
    Linear out_proj;
    /// Bumped on every parameter update; forward caches snapshot it so that
    /// backward can reject stale activations.
    std::uint64_t revision = 0;
};

EmbedNet init_net(int input_dim, int width, int depth, int embed_dim,
                  std::uint64_t seed);

struct BlockCache {
    Matrix lin;                // N x width, pre-normalization
    Matrix norm;               // N x width, post context norm, pre ReLU
    Eigen::RowVectorXd inv_std;  // 1 x width
    Matrix out;                // N x width, block output
};

struct ForwardCache {
    Matrix input;     // N x input_dim
    std::vector<BlockCache> blocks;
    Matrix pre_norm;  // N x embed_dim, projection output before row normalization
    Matrix z;         // N x embed_dim, unit-norm rows
    Vector row_scale;  // N, 1 / sqrt(|u_i|^2 + eps)
    std::uint64_t revision = 0;
};

/// Embed an N x input_dim point set. N must be >= 2 (context normalization
/// standardizes over the points of the sample). Pass a cache to enable
/// backward().
Matrix forward(const EmbedNet& net, const Matrix& points, ForwardCache* cache = nullptr);

/// Gradients with respect to every parameter, same shapes as the net.
struct ParamGrads {
    std::vector<Linear> blocks;
    Linear out_proj;
};

/// Chain rule from dL/dZ back to all parameters, through the row
/// normalization, the projection, and every block. The cache must come from a
/// forward() on the current parameters.
ParamGrads backward(const EmbedNet& net, const ForwardCache& cache,
                    const Matrix& grad_wrt_embedding);

std::size_t param_count(const EmbedNet& net);
Vector flatten_params(const EmbedNet& net);
Vector flatten_grads(const ParamGrads& grads);
void set_params(EmbedNet& net, const Vector& flat);

/// Checkpoint container: architecture, all parameters, the seed the run was
/// started from and the epoch the snapshot was taken at. JSON, exact
/// round-trip.
struct Checkpoint {
    EmbedNet net;
    std::uint64_t seed = 0;
    int epoch = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mmfit
