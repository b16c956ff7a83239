#pragma once

#include <cstdint>
#include <vector>

namespace gclab {

// Sobol low-discrepancy sequence, Gray-code construction, 32-bit precision.
// Direction numbers follow the Joe--Kuo "new-joe-kuo-6" table; we carry the
// first 21 dimensions, which bounds the supported space dimensionality.
inline constexpr int kSobolMaxDim = 21;

class SobolSequence {
 public:
  // dim in [1, kSobolMaxDim]; throws std::invalid_argument otherwise.
  explicit SobolSequence(int dim);

  // Next point in the sequence. The first call returns index 1 (the
  // all-zeros index-0 point is skipped).
  void next(std::vector<double>& point);

  // XOR mask applied to the 32-bit integer lattice before conversion to
  // [0,1); one mask per dimension. Zero masks give the unscrambled sequence.
  void set_digital_shift(const std::vector<std::uint32_t>& masks);

  int dim() const { return dim_; }
  std::uint64_t index() const { return index_; }

 private:
  int dim_;
  std::uint64_t index_ = 0;                   // index of the last emitted point
  std::vector<std::uint32_t> state_;          // current integer lattice point
  std::vector<std::uint32_t> shift_;          // per-dimension digital shift
  std::vector<std::vector<std::uint32_t>> v_; // v_[d][k], k < 32
};

}  // namespace gclab
