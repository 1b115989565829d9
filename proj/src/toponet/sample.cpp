#include "topo/sample.hpp"

#include <algorithm>
#include <string>

namespace topo::net {

Tensor rotate90(const Tensor& x) {
  const int h = x.height();
  const int w = x.width();
  Tensor out(x.channels(), w, h);
  for (int c = 0; c < x.channels(); ++c)
    for (int y = 0; y < w; ++y)
      for (int xx = 0; xx < h; ++xx) out(c, y, xx) = x(c, xx, w - 1 - y);
  return out;
}

namespace {

Tensor mirror(const Tensor& x) {
  Tensor out(x.channels(), x.height(), x.width());
  for (int c = 0; c < x.channels(); ++c)
    for (int y = 0; y < x.height(); ++y)
      for (int xx = 0; xx < x.width(); ++xx) out(c, y, xx) = x(c, y, x.width() - 1 - xx);
  return out;
}

Tensor plane(std::span<const float> values, int h, int w) {
  Tensor t(1, h, w);
  std::copy(values.begin(), values.end(), t.data());
  return t;
}

TrainingSample build(std::span<const float> current, std::span<const float> previous, double volume_fraction,
                     bool previous_is_initial, std::span<const float> final_frame, int h, int w,
                     int transform_id) {
  if (transform_id < 0 || transform_id > 7) fail(ErrorKind::invalid_parameter, "D4 element must lie in 0..7");
  TrainingSample s;
  s.density = plane(current, h, w);
  s.update = s.density;
  for (size_t i = 0; i < s.update.size(); ++i) {
    const double prev = previous_is_initial ? volume_fraction : static_cast<double>(previous[i]);
    s.update[i] -= prev;
  }
  s.target = Tensor(1, h, w);
  for (size_t i = 0; i < s.target.size(); ++i) s.target[i] = final_frame[i] >= 0.5f ? 1.0 : 0.0;
  if (transform_id != 0) {
    s.density = apply_d4(s.density, transform_id);
    s.update = apply_d4(s.update, transform_id);
    s.target = apply_d4(s.target, transform_id);
  }
  return s;
}

void check_k(int k, int frames) {
  if (k < 1 || k > frames - 1) {
    fail(ErrorKind::invalid_parameter,
         "stop iteration " + std::to_string(k) + " outside [1, " + std::to_string(frames - 1) + "]");
  }
}

}  // namespace

Tensor apply_d4(const Tensor& x, int transform_id) {
  if (transform_id < 0 || transform_id > 7) fail(ErrorKind::invalid_parameter, "D4 element must lie in 0..7");
  Tensor out = x;
  for (int r = 0; r < transform_id % 4; ++r) out = rotate90(out);
  if (transform_id >= 4) out = mirror(out);
  return out;
}

Tensor TrainingSample::input() const {
  Tensor in(2, density.height(), density.width());
  std::copy(density.values().begin(), density.values().end(), in.channel(0).begin());
  std::copy(update.values().begin(), update.values().end(), in.channel(1).begin());
  return in;
}

TrainingSample make_sample(const probgen::FrameStack& history, double volume_fraction, int k,
                           int transform_id) {
  check_k(k, history.frames);
  const auto prev = k >= 2 ? history.frame(k - 2) : history.frame(0);
  return build(history.frame(k - 1), prev, volume_fraction, k == 1, history.frame(history.frames - 1),
               history.nely, history.nelx, transform_id);
}

TrainingSample make_sample(const probgen::DatasetReader& reader, std::size_t index, int k,
                           int transform_id) {
  const auto shape = reader.shape(index);
  check_k(k, shape.frames);
  const double f0 = reader.problems().at(index).volume_fraction;
  const auto current = reader.frame(index, k - 1);
  const auto previous = k >= 2 ? reader.frame(index, k - 2) : current;
  const auto final_frame = reader.frame(index, shape.frames - 1);
  return build(current, previous, f0, k == 1, final_frame, shape.nely, shape.nelx, transform_id);
}

}  // namespace topo::net
