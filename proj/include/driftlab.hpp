// Copyright 2026 The driftlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "driftlab/csv.hpp"
#include "driftlab/detector.hpp"
#include "driftlab/error.hpp"
#include "driftlab/estimators.hpp"
#include "driftlab/generators.hpp"
#include "driftlab/harness.hpp"
#include "driftlab/histogram.hpp"
#include "driftlab/moment_tree.hpp"
#include "driftlab/neighbor_kernel.hpp"
#include "driftlab/partition.hpp"
#include "driftlab/random.hpp"
#include "driftlab/stream.hpp"
