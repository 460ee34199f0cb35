// Copyright 2026 The tvsq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "tvsq/analysis.hpp"
#include "tvsq/dataprep.hpp"
#include "tvsq/error.hpp"
#include "tvsq/ident.hpp"
#include "tvsq/io.hpp"
#include "tvsq/metrics.hpp"
#include "tvsq/model.hpp"
#include "tvsq/order.hpp"
#include "tvsq/rng.hpp"
#include "tvsq/stability.hpp"
#include "tvsq/synth.hpp"
#include "tvsq/trace.hpp"
