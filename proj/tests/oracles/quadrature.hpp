#pragma once

// 2x2 Gauss-quadrature element matrices for a unit square, independent of
// the closed forms used by the library. Node order: bottom-left,
// bottom-right, top-right, top-left (y up).

#include <array>
#include <cmath>

namespace oracle {

using Mat8 = std::array<std::array<double, 8>, 8>;
using Mat4 = std::array<std::array<double, 4>, 4>;

inline constexpr double kXi[4] = {-1, 1, 1, -1};
inline constexpr double kEta[4] = {-1, -1, 1, 1};

// Derivatives of the bilinear shape functions w.r.t. physical x and y on a
// unit square (dx/dxi = 1/2).
inline void shape_gradients(double xi, double eta, double dndx[4], double dndy[4]) {
  for (int a = 0; a < 4; ++a) {
    dndx[a] = 0.25 * kXi[a] * (1 + kEta[a] * eta) * 2.0;
    dndy[a] = 0.25 * kEta[a] * (1 + kXi[a] * xi) * 2.0;
  }
}

inline Mat8 stiffness_by_quadrature(double nu) {
  const double g = 1.0 / std::sqrt(3.0);
  const double c = 1.0 / (1.0 - nu * nu);
  const double d[3][3] = {{c, c * nu, 0}, {c * nu, c, 0}, {0, 0, c * (1 - nu) / 2}};
  Mat8 k{};
  for (double xi : {-g, g}) {
    for (double eta : {-g, g}) {
      double dx[4], dy[4];
      shape_gradients(xi, eta, dx, dy);
      double b[3][8] = {};
      for (int a = 0; a < 4; ++a) {
        b[0][2 * a] = dx[a];
        b[1][2 * a + 1] = dy[a];
        b[2][2 * a] = dy[a];
        b[2][2 * a + 1] = dx[a];
      }
      const double jac = 0.25;
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
          double s = 0;
          for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q) s += b[p][i] * d[p][q] * b[q][j];
          k[i][j] += s * jac;
        }
    }
  }
  return k;
}

inline Mat4 conductivity_by_quadrature() {
  const double g = 1.0 / std::sqrt(3.0);
  Mat4 k{};
  for (double xi : {-g, g}) {
    for (double eta : {-g, g}) {
      double dx[4], dy[4];
      shape_gradients(xi, eta, dx, dy);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) k[i][j] += (dx[i] * dx[j] + dy[i] * dy[j]) * 0.25;
    }
  }
  return k;
}

}  // namespace oracle
