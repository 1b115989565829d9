#pragma once

// Direct loop-nest definitions of the layer maps, written against plain
// nested vectors so they share nothing with the library's storage.

#include <algorithm>
#include <span>
#include <vector>

namespace oracle {

using Grid = std::vector<std::vector<double>>;  // [y][x]
using Volume = std::vector<Grid>;               // [c][y][x]

inline Volume volume(int c, int h, int w) { return Volume(c, Grid(h, std::vector<double>(w, 0.0))); }

// kernels[k][c][i][j]
using Kernels = std::vector<std::vector<std::vector<std::vector<double>>>>;

inline Volume conv_same(const Volume& x, const Kernels& k, std::span<const double> bias) {
  const int cin = static_cast<int>(x.size()), h = static_cast<int>(x[0].size()), w = static_cast<int>(x[0][0].size());
  const int cout = static_cast<int>(k.size());
  Volume out = volume(cout, h, w);
  for (int o = 0; o < cout; ++o)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        double s = bias[o];
        for (int c = 0; c < cin; ++c)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              const int yy = y + i - 1, xs = xx + j - 1;
              if (yy >= 0 && yy < h && xs >= 0 && xs < w) s += k[o][c][i][j] * x[c][yy][xs];
            }
        out[o][y][xx] = s;
      }
  return out;
}

inline Volume max_pool(const Volume& x) {
  Volume out = volume(static_cast<int>(x.size()), static_cast<int>(x[0].size()) / 2, static_cast<int>(x[0][0].size()) / 2);
  for (size_t c = 0; c < x.size(); ++c)
    for (size_t y = 0; y < out[c].size(); ++y)
      for (size_t xx = 0; xx < out[c][y].size(); ++xx)
        out[c][y][xx] = std::max({x[c][2 * y][2 * xx], x[c][2 * y][2 * xx + 1], x[c][2 * y + 1][2 * xx],
                                  x[c][2 * y + 1][2 * xx + 1]});
  return out;
}

}  // namespace oracle
