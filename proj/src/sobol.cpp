#include "gclab/sobol.hpp"

#include <bit>
#include <stdexcept>

namespace gclab {
namespace {

constexpr int kBits = 32;

// Joe & Kuo primitive polynomials and initial direction numbers
// (new-joe-kuo-6 table, dimensions 2..21). Dimension 1 is the van der
// Corput sequence (all m_k = 1).
struct JoeKuoRow {
  int degree;               // s
  std::uint32_t poly;       // a (interior polynomial coefficients)
  std::uint32_t m[7];       // m_1..m_s
};

constexpr JoeKuoRow kJoeKuo[20] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
};

std::vector<std::uint32_t> direction_numbers(int d) {
  std::vector<std::uint32_t> m(kBits);
  if (d == 1) {
    for (int k = 0; k < kBits; ++k) m[k] = 1;
  } else {
    const JoeKuoRow& row = kJoeKuo[d - 2];
    const int s = row.degree;
    for (int k = 0; k < s; ++k) m[k] = row.m[k];
    for (int k = s; k < kBits; ++k) {
      std::uint32_t mk = m[k - s] ^ (m[k - s] << s);
      for (int i = 1; i < s; ++i) {
        if ((row.poly >> (s - 1 - i)) & 1u) mk ^= m[k - i] << i;
      }
      m[k] = mk;
    }
  }
  std::vector<std::uint32_t> v(kBits);
  for (int k = 0; k < kBits; ++k) v[k] = m[k] << (kBits - 1 - k);
  return v;
}

}  // namespace

SobolSequence::SobolSequence(int dim) : dim_(dim) {
  if (dim < 1 || dim > kSobolMaxDim)
    throw std::invalid_argument("SobolSequence: dimension must be in [1, " +
                                std::to_string(kSobolMaxDim) + "], got " +
                                std::to_string(dim));
  state_.assign(dim_, 0);
  shift_.assign(dim_, 0);
  v_.reserve(dim_);
  for (int d = 1; d <= dim_; ++d) v_.push_back(direction_numbers(d));
}

void SobolSequence::set_digital_shift(const std::vector<std::uint32_t>& masks) {
  if (static_cast<int>(masks.size()) != dim_)
    throw std::invalid_argument("digital shift mask count != dimension");
  shift_ = masks;
}

void SobolSequence::next(std::vector<double>& point) {
  // Antonov--Saleev: flip the direction number of the lowest zero bit of the
  // previous index. Emitted point index_ corresponds to gray(index_).
  const int c = std::countr_one(index_);
  ++index_;
  point.resize(dim_);
  for (int d = 0; d < dim_; ++d) {
    state_[d] ^= v_[d][c];
    point[d] = double(state_[d] ^ shift_[d]) * 0x1.0p-32;
  }
}

}  // namespace gclab
