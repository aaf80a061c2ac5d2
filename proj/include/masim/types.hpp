// types.hpp - small shared containers.
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace masim {

using cd = std::complex<double>;

// Dense row-major complex matrix; row b holds subcarrier b's symbol series.
struct CMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<cd> v;

  CMatrix() = default;
  CMatrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c) {}

  cd& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  const cd& operator()(int r, int c) const {
    return v[static_cast<std::size_t>(r) * cols + c];
  }
  cd* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const cd* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
};

}  // namespace masim
