#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace fairmdp {

/// Project-wide scalar. Dense types are parameterized on it so the core
/// stays scalar-generic; everything downstream uses the double instantiation.
using Scalar = double;

template <class S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using RowVectorX = Eigen::Matrix<S, 1, Eigen::Dynamic>;

using Matrix = MatrixX<Scalar>;
using Vector = VectorX<Scalar>;
using RowVector = RowVectorX<Scalar>;

/// Per-(state, action) boolean mask; row s lists the allowed actions in s.
using ActionMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr Scalar kDefaultPlanTol = 1e-9;
inline constexpr Scalar kDefaultTieTol = 1e-6;
inline constexpr Scalar kRowSumTol = 1e-12;

struct InvalidMdp : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UnichainViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic random stream.
///
/// Parallel experiment sweeps derive independent streams from a root seed by
/// XOR-ing in the run index and reseeding (Rng::for_run); every module uses
/// this one splitting rule. uniform01 produces 53-bit doubles in [0,1)
/// directly from the engine output so sampled traces are identical across
/// platforms and standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng for_run(std::uint64_t root_seed, std::uint64_t run_index) {
    return Rng(root_seed ^ run_index);
  }

  Scalar uniform01() {
    return static_cast<Scalar>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(Scalar p) { return uniform01() < p; }

  /// Samples an index from a probability vector by CDF inversion.
  template <class Derived>
  int categorical(const Eigen::MatrixBase<Derived>& pmf) {
    const Scalar u = uniform01();
    Scalar acc = 0;
    const int last = static_cast<int>(pmf.size()) - 1;
    for (int i = 0; i < last; ++i) {
      acc += pmf(i);
      if (u < acc) return i;
    }
    return last;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fairmdp
