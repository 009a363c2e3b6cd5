/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "uqsplat/scene.hpp"

namespace uqsplat {

/// RGB raster, channels in [0,1], row-major with interleaved channels.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels; // height * width * 3

    Image() = default;
    Image(int w, int h) : width(w), height(h), pixels(3u * w * h, 0.0) {}

    std::size_t offset(int x, int y) const {
        return 3u * (static_cast<std::size_t>(y) * width + x);
    }
    Vec3 at(int x, int y) const {
        const std::size_t o = offset(x, y);
        return {pixels[o], pixels[o + 1], pixels[o + 2]};
    }
    void set(int x, int y, const Vec3& c) {
        const std::size_t o = offset(x, y);
        pixels[o] = c[0];
        pixels[o + 1] = c[1];
        pixels[o + 2] = c[2];
    }
    bool same_extent(const Image& other) const {
        return width == other.width && height == other.height;
    }
};

/// Soft per-view compositing weight of one object, values in [0,1].
struct ObjectMask {
    int object_id = 0;
    int width = 0;
    int height = 0;
    std::vector<double> values; // height * width, row-major

    ObjectMask() = default;
    ObjectMask(int k, int w, int h)
        : object_id(k), width(w), height(h),
          values(static_cast<std::size_t>(w) * h, 0.0) {}

    double at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
    double& at(int x, int y) {
        return values[static_cast<std::size_t>(y) * width + x];
    }
};

/// Scalar per-pixel map (variance heatmaps, footprints).
struct ScalarMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    ScalarMap() = default;
    ScalarMap(int w, int h)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0) {}

    double at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
    double& at(int x, int y) {
        return values[static_cast<std::size_t>(y) * width + x];
    }
};

inline double mse(const Image& a, const Image& b) {
    if (!a.same_extent(b)) {
        throw std::invalid_argument("dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double r = a.pixels[i] - b.pixels[i];
        acc += r * r;
    }
    return acc / static_cast<double>(a.pixels.size());
}

/// PSNR in dB against peak value 1. Infinite for identical images.
inline double psnr(const Image& a, const Image& b) {
    const double m = mse(a, b);
    if (m == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return -10.0 * std::log10(m);
}

} // namespace uqsplat
