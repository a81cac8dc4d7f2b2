#ifndef SAIL_COMMON_HPP_
#define SAIL_COMMON_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sail {

using Eigen::Matrix3d;
using Eigen::Matrix4d;
using Eigen::MatrixXd;
using Eigen::Quaterniond;
using Eigen::Vector3d;
using Eigen::VectorXd;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Runtime fault: numerically or physically invalid situation detected
/// during simulation or solving (singular inertia, degenerate constraint
/// box, non-finite state, ...). Aborts the run; never silently repaired.
class Fault : public std::runtime_error {
public:
  explicit Fault(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration (bad parameter combination, malformed file).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic 64-bit PRNG (splitmix64). Implementation-defined behaviour
/// in std distributions would break the bit-identical-trace contract, so the
/// uniform draw is done by hand.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
  std::uint64_t state_;
};

}  // namespace sail

#endif  // SAIL_COMMON_HPP_
