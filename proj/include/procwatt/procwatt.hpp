/*
    Copyright (c) 2026 The procwatt Authors
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at
        http://www.apache.org/licenses/LICENSE-2.0
    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

// Umbrella header.

#pragma once

#include "procwatt/cross_validation.hpp"
#include "procwatt/dataset.hpp"
#include "procwatt/error.hpp"
#include "procwatt/linear_model.hpp"
#include "procwatt/metrics.hpp"
#include "procwatt/mic.hpp"
#include "procwatt/mlp.hpp"
#include "procwatt/model_io.hpp"
#include "procwatt/normalize.hpp"
#include "procwatt/numeric.hpp"
#include "procwatt/pipeline.hpp"
#include "procwatt/power_stream.hpp"
#include "procwatt/proc_counters.hpp"
#include "procwatt/regression_tree.hpp"
#include "procwatt/selection.hpp"
#include "procwatt/stream_merge.hpp"
#include "procwatt/version.hpp"
#include "procwatt/workload.hpp"
