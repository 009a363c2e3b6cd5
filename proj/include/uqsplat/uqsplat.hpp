/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "uqsplat/camera.hpp"
#include "uqsplat/fisher.hpp"
#include "uqsplat/image.hpp"
#include "uqsplat/io.hpp"
#include "uqsplat/nbv.hpp"
#include "uqsplat/oracle.hpp"
#include "uqsplat/presets.hpp"
#include "uqsplat/propagation.hpp"
#include "uqsplat/render.hpp"
#include "uqsplat/rng.hpp"
#include "uqsplat/scene.hpp"
#include "uqsplat/train.hpp"
