#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace mmfit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Coeffs = Eigen::Matrix<double, 6, 1>;

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// geometry
struct DegenerateModel : Error { using Error::Error; };
struct CoincidentPoints : Error { using Error::Error; };
struct CollinearPoints : Error { using Error::Error; };
struct DegenerateConfiguration : Error { using Error::Error; };
struct NotAnEllipse : Error { using Error::Error; };
struct SingularScatter : Error { using Error::Error; };

// datagen / io
struct InvalidSpec : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };

// net / losses
struct DimensionMismatch : Error { using Error::Error; };
struct StaleCache : Error { using Error::Error; };
struct EmptyCluster : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };

// inference
struct TooManyClusters : Error { using Error::Error; };
struct CurveTooShort : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };

// baseline
struct InsufficientPoints : Error { using Error::Error; };
struct NoModelFound : Error { using Error::Error; };

using Rng = std::mt19937_64;

/// Derive an independent stream seed from a master seed and a stream index.
/// splitmix64 finalizer; decorrelates nearby (seed, index) pairs.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace mmfit
