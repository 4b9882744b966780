#include "trires/otsu.hpp"

#include <boost/multiprecision/cpp_int.hpp>

namespace trires {

namespace mp = boost::multiprecision;

Histogram histogram(const GrayImage& image) {
  Histogram h{};
  for (auto v : image.pixels) ++h[v];
  return h;
}

int otsu_threshold(const Histogram& hist) {
  int distinct = 0;
  mp::int256_t total = 0, weighted = 0;
  for (int v = 0; v < 256; ++v) {
    if (hist[v]) ++distinct;
    total += hist[v];
    weighted += mp::int256_t(hist[v]) * v;
  }
  if (distinct < 2) throw DegenerateHistogram("histogram has fewer than two distinct values");

  // With n0, s0 the count and value sum of class 0, the between-class variance
  // is (N s0 - S n0)^2 / (N^2 n0 n1); N^2 is common to every t.
  mp::int256_t n0 = 0, s0 = 0;
  mp::int256_t best_num = 0, best_den = 1;
  int best_t = 0;
  for (int t = 0; t < 255; ++t) {
    n0 += hist[t];
    s0 += mp::int256_t(hist[t]) * t;
    const mp::int256_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const mp::int256_t d = total * s0 - weighted * n0;
    const mp::int256_t num = d * d;
    const mp::int256_t den = n0 * n1;
    if (num * best_den > best_num * den) {
      best_num = num;
      best_den = den;
      best_t = t;
    }
  }
  return best_t;
}

int otsu_threshold(const GrayImage& image) { return otsu_threshold(histogram(image)); }

GrayImage foreground_above(const GrayImage& image, int t) {
  GrayImage out(image.width, image.height);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) out.pixels[i] = image.pixels[i] > t ? 1 : 0;
  return out;
}

}  // namespace trires
