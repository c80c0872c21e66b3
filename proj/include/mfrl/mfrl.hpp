// Copyright 2026 The mfrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "mfrl/density.hpp"
#include "mfrl/dynamics.hpp"
#include "mfrl/eluder.hpp"
#include "mfrl/errors.hpp"
#include "mfrl/harness.hpp"
#include "mfrl/learner.hpp"
#include "mfrl/matrix.hpp"
#include "mfrl/model.hpp"
#include "mfrl/model_class.hpp"
#include "mfrl/planning.hpp"
#include "mfrl/policy.hpp"
#include "mfrl/rng.hpp"
#include "mfrl/serialize.hpp"
