#include "ctflow/flow.hpp"

#include "ctflow/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace ctflow {

namespace {

// Mirror index into [0, n) without repeating the edge sample (…2 1 | 0 1 2… ).
inline Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

// Correlation along columns (kernel runs over row offsets).
Eigen::MatrixXd correlate_rows(const Eigen::MatrixXd& img, const std::vector<double>& kernel) {
  const Eigen::Index rows = img.rows(), cols = img.cols();
  const Eigen::Index radius = static_cast<Eigen::Index>(kernel.size() / 2);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] * img(reflect(r + k, rows), c);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

// Correlation along rows (kernel runs over column offsets).
Eigen::MatrixXd correlate_cols(const Eigen::MatrixXd& img, const std::vector<double>& kernel) {
  const Eigen::Index rows = img.rows(), cols = img.cols();
  const Eigen::Index radius = static_cast<Eigen::Index>(kernel.size() / 2);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] * img(r, reflect(c + k, cols));
      }
      out(r, c) = acc;
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma, int radius) {
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
  }
  return k;
}

std::vector<double> normalized_gaussian(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::lround(3.0 * sigma)));
  auto k = gaussian_kernel(sigma, radius);
  double sum = 0.0;
  for (double v : k) sum += v;
  for (double& v : k) v /= sum;
  return k;
}

Eigen::MatrixXd gaussian_blur(const Eigen::MatrixXd& img, double sigma) {
  if (sigma <= 0.0) return img;
  const auto k = normalized_gaussian(sigma);
  return correlate_cols(correlate_rows(img, k), k);
}

// Bilinear sample with clamped coordinates.
double sample_bilinear(const Eigen::MatrixXd& img, double row, double col) {
  const Eigen::Index rows = img.rows(), cols = img.cols();
  row = std::clamp(row, 0.0, static_cast<double>(rows - 1));
  col = std::clamp(col, 0.0, static_cast<double>(cols - 1));
  const Eigen::Index r0 = std::min(static_cast<Eigen::Index>(row), rows - 2 >= 0 ? rows - 2 : 0);
  const Eigen::Index c0 = std::min(static_cast<Eigen::Index>(col), cols - 2 >= 0 ? cols - 2 : 0);
  const double fr = row - static_cast<double>(r0);
  const double fc = col - static_cast<double>(c0);
  const Eigen::Index r1 = std::min(r0 + 1, rows - 1);
  const Eigen::Index c1 = std::min(c0 + 1, cols - 1);
  return (1.0 - fr) * ((1.0 - fc) * img(r0, c0) + fc * img(r0, c1)) +
         fr * ((1.0 - fc) * img(r1, c0) + fc * img(r1, c1));
}

Eigen::MatrixXd resize_bilinear(const Eigen::MatrixXd& img, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd out(rows, cols);
  const double sr = static_cast<double>(img.rows()) / static_cast<double>(rows);
  const double sc = static_cast<double>(img.cols()) / static_cast<double>(cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double src_r = (static_cast<double>(r) + 0.5) * sr - 0.5;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double src_c = (static_cast<double>(c) + 0.5) * sc - 0.5;
      out(r, c) = sample_bilinear(img, src_r, src_c);
    }
  }
  return out;
}

// One displacement refinement: warp the next-frame expansion by the
// current flow, assemble the 2x2 normal equations per pixel, smooth them
// spatially and solve.
void update_flow(const PolyExpansion& p1, const PolyExpansion& p2, Eigen::MatrixXd& vx,
                 Eigen::MatrixXd& vy, const FarnebackConfig& cfg) {
  const Eigen::Index rows = vx.rows(), cols = vx.cols();
  Eigen::MatrixXd g11(rows, cols), g12(rows, cols), g22(rows, cols);
  Eigen::MatrixXd h1(rows, cols), h2(rows, cols);

  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double dx = vx(r, c);
      const double dy = vy(r, c);
      const double wr = static_cast<double>(r) + dy;
      const double wc = static_cast<double>(c) + dx;

      const double a11 = 0.5 * (p1.axx(r, c) + sample_bilinear(p2.axx, wr, wc));
      const double a12 = 0.5 * (p1.axy(r, c) + sample_bilinear(p2.axy, wr, wc));
      const double a22 = 0.5 * (p1.ayy(r, c) + sample_bilinear(p2.ayy, wr, wc));

      double db_x = 0.5 * (p1.bx(r, c) - sample_bilinear(p2.bx, wr, wc));
      double db_y = 0.5 * (p1.by(r, c) - sample_bilinear(p2.by, wr, wc));
      db_x += a11 * dx + a12 * dy;
      db_y += a12 * dx + a22 * dy;

      g11(r, c) = a11 * a11 + a12 * a12;
      g12(r, c) = a12 * (a11 + a22);
      g22(r, c) = a12 * a12 + a22 * a22;
      h1(r, c) = a11 * db_x + a12 * db_y;
      h2(r, c) = a12 * db_x + a22 * db_y;
    }
  }

  g11 = gaussian_blur(g11, cfg.flow_sigma);
  g12 = gaussian_blur(g12, cfg.flow_sigma);
  g22 = gaussian_blur(g22, cfg.flow_sigma);
  h1 = gaussian_blur(h1, cfg.flow_sigma);
  h2 = gaussian_blur(h2, cfg.flow_sigma);

  constexpr double kRidge = 1e-9;  // keeps flat neighborhoods at zero flow
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double a = g11(r, c) + kRidge;
      const double d = g22(r, c) + kRidge;
      const double b = g12(r, c);
      const double det = a * d - b * b;
      vx(r, c) = (d * h1(r, c) - b * h2(r, c)) / det;
      vy(r, c) = (a * h2(r, c) - b * h1(r, c)) / det;
    }
  }
}

Mask erode(const Mask& mask, int radius) {
  if (radius <= 0) return mask;
  const Eigen::Index rows = mask.rows(), cols = mask.cols();
  Mask tmp(rows, cols), out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::uint8_t v = 1;
      for (Eigen::Index k = -radius; k <= radius && v; ++k) {
        const Eigen::Index rr = r + k;
        if (rr < 0 || rr >= rows || !mask(rr, c)) v = 0;
      }
      tmp(r, c) = v;
    }
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::uint8_t v = 1;
      for (Eigen::Index k = -radius; k <= radius && v; ++k) {
        const Eigen::Index cc = c + k;
        if (cc < 0 || cc >= cols || !tmp(r, cc)) v = 0;
      }
      out(r, c) = v;
    }
  }
  return out;
}

}  // namespace

void FarnebackConfig::validate() const {
  if (window_radius < 1) throw ValidationError("farneback window_radius must be >= 1");
  if (!(poly_sigma > 0.0)) throw ValidationError("farneback poly_sigma must be > 0");
  if (levels < 1) throw ValidationError("farneback levels must be >= 1");
  if (!(pyr_scale > 0.0) || !(pyr_scale < 1.0)) {
    throw ValidationError("farneback pyr_scale must be in (0, 1)");
  }
  if (iterations < 1) throw ValidationError("farneback iterations must be >= 1");
  if (!(flow_sigma > 0.0)) throw ValidationError("farneback flow_sigma must be > 0");
}

PolyExpansion polynomial_expansion(const Eigen::MatrixXd& image, const FarnebackConfig& cfg) {
  cfg.validate();
  const int radius = cfg.window_radius;
  const auto g = gaussian_kernel(cfg.poly_sigma, radius);
  std::vector<double> gu(g.size()), gu2(g.size());
  for (int i = -radius; i <= radius; ++i) {
    const std::size_t k = static_cast<std::size_t>(i + radius);
    gu[k] = g[k] * i;
    gu2[k] = g[k] * i * i;
  }

  // Normal matrix of the weighted basis {1, u, v, u^2, v^2, uv}; identical
  // at every pixel, so it is inverted once.
  Eigen::Matrix<double, 6, 6> gram = Eigen::Matrix<double, 6, 6>::Zero();
  for (int v = -radius; v <= radius; ++v) {
    for (int u = -radius; u <= radius; ++u) {
      const double w = g[static_cast<std::size_t>(u + radius)] * g[static_cast<std::size_t>(v + radius)];
      Eigen::Matrix<double, 6, 1> basis;
      basis << 1.0, u, v, static_cast<double>(u) * u, static_cast<double>(v) * v,
          static_cast<double>(u) * v;
      gram += w * basis * basis.transpose();
    }
  }
  const Eigen::Matrix<double, 6, 6> gram_inv = gram.inverse();

  // Separable projections onto the weighted basis.
  const Eigen::MatrixXd t0 = correlate_rows(image, g);    // sum_v g(v) f
  const Eigen::MatrixXd t1 = correlate_rows(image, gu);   // sum_v g(v) v f
  const Eigen::MatrixXd t2 = correlate_rows(image, gu2);  // sum_v g(v) v^2 f

  const std::array<Eigen::MatrixXd, 6> proj = {
      correlate_cols(t0, g),   correlate_cols(t0, gu), correlate_cols(t1, g),
      correlate_cols(t0, gu2), correlate_cols(t2, g),  correlate_cols(t1, gu)};

  const Eigen::Index rows = image.rows(), cols = image.cols();
  PolyExpansion out;
  out.c.resize(rows, cols);
  out.bx.resize(rows, cols);
  out.by.resize(rows, cols);
  out.axx.resize(rows, cols);
  out.axy.resize(rows, cols);
  out.ayy.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      Eigen::Matrix<double, 6, 1> rhs;
      for (int k = 0; k < 6; ++k) rhs(k) = proj[static_cast<std::size_t>(k)](r, c);
      const Eigen::Matrix<double, 6, 1> coef = gram_inv * rhs;
      out.c(r, c) = coef(0);
      out.bx(r, c) = coef(1);
      out.by(r, c) = coef(2);
      out.axx(r, c) = coef(3);
      out.ayy(r, c) = coef(4);
      out.axy(r, c) = 0.5 * coef(5);
    }
  }
  return out;
}

FlowField estimate_flow(const TactileFrame& prev, const TactileFrame& next,
                        const FarnebackConfig& cfg, const FlowField* init) {
  cfg.validate();
  if (prev.intensity.rows() != next.intensity.rows() ||
      prev.intensity.cols() != next.intensity.cols()) {
    throw ValidationError("estimate_flow: frame sizes differ");
  }
  if (prev.plane != next.plane) {
    throw ValidationError("estimate_flow: frames come from different projections");
  }
  const Eigen::Index rows = prev.intensity.rows(), cols = prev.intensity.cols();

  // Level sizes, finest first; levels too small for the window are dropped.
  struct Level {
    Eigen::Index rows, cols;
    double scale;
  };
  std::vector<Level> pyramid;
  for (int k = 0; k < cfg.levels; ++k) {
    const double scale = std::pow(cfg.pyr_scale, k);
    const Eigen::Index lr = static_cast<Eigen::Index>(std::lround(rows * scale));
    const Eigen::Index lc = static_cast<Eigen::Index>(std::lround(cols * scale));
    if (lr < 2 * cfg.window_radius + 3 || lc < 2 * cfg.window_radius + 3) break;
    pyramid.push_back({lr, lc, scale});
  }
  if (pyramid.empty()) pyramid.push_back({rows, cols, 1.0});

  Eigen::MatrixXd vx, vy;
  for (std::size_t li = pyramid.size(); li-- > 0;) {
    const Level& level = pyramid[li];

    if (li + 1 == pyramid.size()) {
      if (init != nullptr) {
        vx = resize_bilinear(init->vx, level.rows, level.cols) *
             (static_cast<double>(level.cols) / static_cast<double>(cols));
        vy = resize_bilinear(init->vy, level.rows, level.cols) *
             (static_cast<double>(level.rows) / static_cast<double>(rows));
      } else {
        vx = Eigen::MatrixXd::Zero(level.rows, level.cols);
        vy = Eigen::MatrixXd::Zero(level.rows, level.cols);
      }
    } else {
      const Level& coarse = pyramid[li + 1];
      vx = resize_bilinear(vx, level.rows, level.cols) *
           (static_cast<double>(level.cols) / static_cast<double>(coarse.cols));
      vy = resize_bilinear(vy, level.rows, level.cols) *
           (static_cast<double>(level.rows) / static_cast<double>(coarse.rows));
    }

    // Each level is sampled from the full-resolution frame after a blur
    // matched to the decimation factor.
    const double blur_sigma = level.scale < 1.0 ? 0.5 * (1.0 / level.scale - 1.0) : 0.0;
    Eigen::MatrixXd i1 = prev.intensity, i2 = next.intensity;
    if (level.scale < 1.0) {
      i1 = resize_bilinear(gaussian_blur(i1, blur_sigma), level.rows, level.cols);
      i2 = resize_bilinear(gaussian_blur(i2, blur_sigma), level.rows, level.cols);
    }

    const PolyExpansion p1 = polynomial_expansion(i1, cfg);
    const PolyExpansion p2 = polynomial_expansion(i2, cfg);
    for (int it = 0; it < cfg.iterations; ++it) {
      update_flow(p1, p2, vx, vy, cfg);
    }
  }

  FlowField flow;
  flow.vx = std::move(vx);
  flow.vy = std::move(vy);

  Mask joint(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      joint(r, c) = (prev.mask(r, c) && next.mask(r, c)) ? 1 : 0;
    }
  }
  // Expansion coefficients are unreliable near the silhouette edge.
  flow.mask = erode(joint, cfg.window_radius);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!flow.mask(r, c)) {
        flow.vx(r, c) = 0.0;
        flow.vy(r, c) = 0.0;
      }
    }
  }
  return flow;
}

AggregateFlow aggregate(const FlowField& flow, double coverage_threshold) {
  double wsum = 0.0;
  Eigen::Vector2d vsum = Eigen::Vector2d::Zero();
  std::size_t masked = 0, moving = 0;
  for (Eigen::Index r = 0; r < flow.rows(); ++r) {
    for (Eigen::Index c = 0; c < flow.cols(); ++c) {
      if (!flow.mask(r, c)) continue;
      ++masked;
      const Eigen::Vector2d v(flow.vx(r, c), flow.vy(r, c));
      const double m = v.norm();
      wsum += m;
      vsum += m * v;
      if (m > coverage_threshold) ++moving;
    }
  }
  if (masked == 0) throw ValidationError("aggregate: empty flow mask");

  AggregateFlow out;
  out.coverage = static_cast<double>(moving) / static_cast<double>(masked);
  if (wsum > 0.0) {
    const Eigen::Vector2d mean = vsum / wsum;
    out.magnitude = mean.norm();
    if (out.magnitude > 0.0) out.direction = mean / out.magnitude;
  }
  return out;
}

Eigen::Vector2d masked_mean(const FlowField& flow) {
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  std::size_t count = 0;
  for (Eigen::Index r = 0; r < flow.rows(); ++r) {
    for (Eigen::Index c = 0; c < flow.cols(); ++c) {
      if (!flow.mask(r, c)) continue;
      sum += Eigen::Vector2d(flow.vx(r, c), flow.vy(r, c));
      ++count;
    }
  }
  if (count == 0) throw ValidationError("masked_mean: empty flow mask");
  return sum / static_cast<double>(count);
}

double mean_warp_residual(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& next,
                          const FlowField& flow) {
  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index r = 0; r < flow.rows(); ++r) {
    for (Eigen::Index c = 0; c < flow.cols(); ++c) {
      if (!flow.mask(r, c)) continue;
      const double warped = sample_bilinear(next, static_cast<double>(r) + flow.vy(r, c),
                                            static_cast<double>(c) + flow.vx(r, c));
      sum += std::abs(warped - prev(r, c));
      ++count;
    }
  }
  if (count == 0) throw ValidationError("mean_warp_residual: empty flow mask");
  return sum / static_cast<double>(count);
}

}  // namespace ctflow
