#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace disco {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = Eigen::Index;

/// Raised for every recoverable failure in the library (bad input, shape
/// mismatch, corrupt files). Messages are meant to be shown to users as-is.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lower clamp applied to probabilities before taking logarithms.
inline constexpr double kLogClamp = 1e-12;

/// Derives an independent 64-bit stream seed from a master seed and a task
/// index (splitmix64 finaliser over the pair).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t task) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (task + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

}  // namespace disco
