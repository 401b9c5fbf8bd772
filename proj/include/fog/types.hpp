#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace fog {

using Scalar = double;
using Vec = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using IntVec = Eigen::Array<int, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

// Missing feature samples are carried as NaN with explicit checks, never as
// silent zeros.
inline constexpr Scalar kMissing = std::numeric_limits<Scalar>::quiet_NaN();

inline bool is_missing(Scalar v) { return std::isnan(v); }

// A malformed file: bad header, wrong column count, unparseable cell.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally valid input that violates a domain invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An out-of-range or inconsistent parameter to a kernel or operation.
struct ParamError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Deterministic 64-bit stream used everywhere randomness is needed; keeps
// outputs byte-identical for a given seed independent of platform library
// details.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  Scalar uniform() {
    return static_cast<Scalar>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<Scalar>(n)) %
           n;
  }

  // standard normal via Marsaglia polar method
  Scalar normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    Scalar u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const Scalar m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  Scalar exponential(Scalar mean) { return -mean * std::log1p(-uniform()); }

  // fork a derived, independent stream (e.g. one per subject)
  Rng fork(std::uint64_t salt) const {
    Rng r(state_ ^ (salt * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
    return r;
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  Scalar spare_ = 0.0;
};

}  // namespace fog
