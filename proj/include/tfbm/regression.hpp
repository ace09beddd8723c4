#pragma once

#include "tfbm/params.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace tfbm {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

/// Ordinary least squares y = a + b x with the usual standard error of b.
[[nodiscard]] inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    detail::require(x.size() == y.size(), "least_squares: size mismatch");
    detail::require(x.size() >= 2, "least_squares: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    detail::require(sxx > 0.0, "least_squares: abscissae must not all coincide");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            ssr += r * r;
        }
        f.slope_stderr = std::sqrt(ssr / (n - 2.0) / sxx);
    }
    return f;
}

/// Fit of log2(error) against log2(resolution).
[[nodiscard]] inline LinearFit loglog_fit(std::span<const double> resolutions,
                                          std::span<const double> errors) {
    detail::require(resolutions.size() == errors.size(), "loglog_fit: size mismatch");
    std::vector<double> lx(resolutions.size()), ly(errors.size());
    for (std::size_t i = 0; i < lx.size(); ++i) {
        detail::require(resolutions[i] > 0.0 && errors[i] > 0.0, "loglog_fit: values must be positive");
        lx[i] = std::log2(resolutions[i]);
        ly[i] = std::log2(errors[i]);
    }
    return least_squares(lx, ly);
}

}  // namespace tfbm
