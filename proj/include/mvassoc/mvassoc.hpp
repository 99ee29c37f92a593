/*
 * Copyright 2026 The mvassoc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Everything in one include.

#pragma once

#include "mvassoc/association.hpp"
#include "mvassoc/association_io.hpp"
#include "mvassoc/descriptors.hpp"
#include "mvassoc/detections.hpp"
#include "mvassoc/errors.hpp"
#include "mvassoc/evaluation.hpp"
#include "mvassoc/geometry.hpp"
#include "mvassoc/hungarian.hpp"
#include "mvassoc/metrics.hpp"
#include "mvassoc/parallel.hpp"
#include "mvassoc/scene.hpp"
#include "mvassoc/scene_io.hpp"
#include "mvassoc/synthetic.hpp"
