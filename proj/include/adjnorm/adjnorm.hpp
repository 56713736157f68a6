/*
 *   Copyright 2026 The adjnorm Authors
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

#pragma once

#include "adjnorm/baselines.hpp"
#include "adjnorm/common.hpp"
#include "adjnorm/config.hpp"
#include "adjnorm/dataset.hpp"
#include "adjnorm/dense.hpp"
#include "adjnorm/experiments.hpp"
#include "adjnorm/metrics.hpp"
#include "adjnorm/models.hpp"
#include "adjnorm/report.hpp"
#include "adjnorm/sparse.hpp"
#include "adjnorm/theory.hpp"
#include "adjnorm/training.hpp"
