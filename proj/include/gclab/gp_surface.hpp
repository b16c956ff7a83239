#pragma once

#include <vector>

namespace gclab {

struct SurfacePoint {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
};

// Prediction grid for plot emission only; no metric consumes this type.
struct SurfaceGrid {
  std::vector<double> xs;  // grid abscissae
  std::vector<double> ys;
  std::vector<double> z;   // z[iy * xs.size() + ix]
  double length_scale = 0.0;
  double noise_var = 0.0;
};

// Zero-mean GP regression with an isotropic RBF kernel on [0,1]-normalized
// coordinates. Exposed for direct use in tests.
std::vector<double> gp_predict(const std::vector<SurfacePoint>& points,
                               const std::vector<std::pair<double, double>>& queries,
                               double length_scale, double noise_var);

// Fits length-scale and noise by grid search over a fixed candidate set,
// maximizing the log marginal likelihood, then predicts on a
// grid_resolution^2 lattice over the input bounding box. Coordinates must be
// pre-transformed (log-scale dimensions to log space) by the caller.
SurfaceGrid fit_surface(const std::vector<SurfacePoint>& points,
                        int grid_resolution);

}  // namespace gclab
