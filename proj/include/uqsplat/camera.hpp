/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cmath>
#include <stdexcept>

#include "uqsplat/scene.hpp"

namespace uqsplat {

/// Similarity transform from the world plane to a W x H pixel grid.
/// u = zoom * R(-psi) * (x - center) + (W/2, H/2).
struct CameraPose {
    Vec2 center{0.0, 0.0};
    double psi = 0.0;
    double zoom = 1.0; // pixels per world unit
    int width = 1;
    int height = 1;
};

inline void validate_camera(const CameraPose& cam) {
    if (!(cam.zoom > 0.0) || !std::isfinite(cam.zoom)) {
        throw std::invalid_argument("camera zoom must be positive");
    }
    if (cam.width < 1 || cam.height < 1) {
        throw std::invalid_argument("camera extent must be at least 1 pixel");
    }
}

inline Mat2 rotation(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat2 r;
    r << c, -s, s, c;
    return r;
}

inline Vec2 world_to_pixel(const CameraPose& cam, const Vec2& x) {
    const Vec2 offset(0.5 * cam.width, 0.5 * cam.height);
    return cam.zoom * (rotation(-cam.psi) * (x - cam.center)) + offset;
}

inline Vec2 pixel_to_world(const CameraPose& cam, const Vec2& u) {
    const Vec2 offset(0.5 * cam.width, 0.5 * cam.height);
    return rotation(cam.psi) * ((u - offset) / cam.zoom) + cam.center;
}

} // namespace uqsplat
