#include "gclab/gp_surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gclab/diffnet.hpp"  // NumericError

namespace gclab {

namespace {

struct Scaler {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  std::pair<double, double> apply(double x, double y) const {
    const double sx = x1 > x0 ? (x - x0) / (x1 - x0) : 0.0;
    const double sy = y1 > y0 ? (y - y0) / (y1 - y0) : 0.0;
    return {sx, sy};
  }
};

Scaler make_scaler(const std::vector<SurfacePoint>& pts) {
  Scaler s;
  s.x0 = s.x1 = pts[0].x;
  s.y0 = s.y1 = pts[0].y;
  for (const auto& p : pts) {
    s.x0 = std::min(s.x0, p.x);
    s.x1 = std::max(s.x1, p.x);
    s.y0 = std::min(s.y0, p.y);
    s.y1 = std::max(s.y1, p.y);
  }
  return s;
}

double rbf(double dx, double dy, double ls) {
  return std::exp(-(dx * dx + dy * dy) / (2.0 * ls * ls));
}

// Cholesky in place; returns false on a non-positive pivot.
bool cholesky(std::vector<double>& a, int n) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = a[i * n + j];
      for (int k = 0; k < j; ++k) sum -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (sum <= 0.0) return false;
        a[i * n + i] = std::sqrt(sum);
      } else {
        a[i * n + j] = sum / a[j * n + j];
      }
    }
  }
  return true;
}

void chol_solve(const std::vector<double>& L, int n, std::vector<double>& b) {
  for (int i = 0; i < n; ++i) {
    double sum = b[i];
    for (int k = 0; k < i; ++k) sum -= L[i * n + k] * b[k];
    b[i] = sum / L[i * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double sum = b[i];
    for (int k = i + 1; k < n; ++k) sum -= L[k * n + i] * b[k];
    b[i] = sum / L[i * n + i];
  }
}

struct GpFit {
  std::vector<double> alpha;
  double log_ml = -std::numeric_limits<double>::infinity();
  bool ok = false;
};

GpFit fit_once(const std::vector<std::pair<double, double>>& x,
               const std::vector<double>& y, double ls, double noise,
               double sf2) {
  const int n = static_cast<int>(x.size());
  GpFit fit;
  for (double jitter = 0.0;;) {
    std::vector<double> K(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        K[i * n + j] =
            sf2 * rbf(x[i].first - x[j].first, x[i].second - x[j].second, ls) +
            (i == j ? noise + jitter : 0.0);
    if (cholesky(K, n)) {
      fit.alpha = y;
      chol_solve(K, n, fit.alpha);
      double quad = 0.0, logdet = 0.0;
      for (int i = 0; i < n; ++i) {
        quad += y[i] * fit.alpha[i];
        logdet += std::log(K[i * n + i]);
      }
      fit.log_ml = -0.5 * quad - logdet - 0.5 * n * std::log(2.0 * M_PI);
      fit.ok = true;
      return fit;
    }
    jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    if (jitter > 1e-2)
      throw NumericError("fit_surface: kernel matrix stayed singular after "
                         "jitter escalation");
  }
}

}  // namespace

std::vector<double> gp_predict(
    const std::vector<SurfacePoint>& points,
    const std::vector<std::pair<double, double>>& queries, double length_scale,
    double noise_var) {
  if (points.empty()) throw std::invalid_argument("gp_predict: no points");
  const Scaler sc = make_scaler(points);
  const int n = static_cast<int>(points.size());

  double mean = 0.0;
  for (const auto& p : points) mean += p.score / n;
  double var = 0.0;
  for (const auto& p : points) var += (p.score - mean) * (p.score - mean) / n;
  const double sf2 = var > 0 ? var : 1.0;

  std::vector<std::pair<double, double>> xs(n);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = sc.apply(points[i].x, points[i].y);
    y[i] = points[i].score - mean;
  }
  auto fit = fit_once(xs, y, length_scale, noise_var, sf2);

  std::vector<double> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    const auto sq = sc.apply(q.first, q.second);
    double pred = 0.0;
    for (int i = 0; i < n; ++i)
      pred += fit.alpha[i] * sf2 *
              rbf(sq.first - xs[i].first, sq.second - xs[i].second,
                  length_scale);
    out.push_back(pred + mean);
  }
  return out;
}

SurfaceGrid fit_surface(const std::vector<SurfacePoint>& points,
                        int grid_resolution) {
  if (points.size() < 4)
    throw std::invalid_argument("fit_surface: need at least 4 points");
  if (grid_resolution < 2)
    throw std::invalid_argument("fit_surface: grid resolution must be >= 2");

  const Scaler sc = make_scaler(points);
  const int n = static_cast<int>(points.size());
  double mean = 0.0;
  for (const auto& p : points) mean += p.score / n;
  double var = 0.0;
  for (const auto& p : points) var += (p.score - mean) * (p.score - mean) / n;

  SurfaceGrid grid;
  grid.xs.resize(grid_resolution);
  grid.ys.resize(grid_resolution);
  for (int i = 0; i < grid_resolution; ++i) {
    const double f = double(i) / (grid_resolution - 1);
    grid.xs[i] = sc.x0 + f * (sc.x1 - sc.x0);
    grid.ys[i] = sc.y0 + f * (sc.y1 - sc.y0);
  }

  if (var == 0.0) {  // constant observations fit a constant surface
    grid.z.assign(grid_resolution * grid_resolution, mean);
    return grid;
  }

  std::vector<std::pair<double, double>> xs(n);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = sc.apply(points[i].x, points[i].y);
    y[i] = points[i].score - mean;
  }

  const double ls_candidates[] = {0.03, 0.05, 0.08, 0.12, 0.18,
                                  0.25, 0.4,  0.6,  1.0,  1.5};
  const double noise_candidates[] = {1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1};
  double best_ml = -std::numeric_limits<double>::infinity();
  double best_ls = ls_candidates[0], best_noise = noise_candidates[0];
  for (double ls : ls_candidates) {
    for (double noise : noise_candidates) {
      auto fit = fit_once(xs, y, ls, noise * var, var);
      if (fit.ok && fit.log_ml > best_ml) {
        best_ml = fit.log_ml;
        best_ls = ls;
        best_noise = noise * var;
      }
    }
  }

  auto fit = fit_once(xs, y, best_ls, best_noise, var);
  grid.length_scale = best_ls;
  grid.noise_var = best_noise;
  grid.z.resize(grid_resolution * grid_resolution);
  for (int iy = 0; iy < grid_resolution; ++iy) {
    for (int ix = 0; ix < grid_resolution; ++ix) {
      const auto sq = sc.apply(grid.xs[ix], grid.ys[iy]);
      double pred = 0.0;
      for (int i = 0; i < n; ++i)
        pred += fit.alpha[i] * var *
                rbf(sq.first - xs[i].first, sq.second - xs[i].second, best_ls);
      grid.z[iy * grid_resolution + ix] = pred + mean;
    }
  }
  return grid;
}

}  // namespace gclab
