/* Copyright 2026 The collage_forge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include "collage_forge/background_mining.hpp"
#include "collage_forge/collage_engine.hpp"
#include "collage_forge/context_index.hpp"
#include "collage_forge/core_model.hpp"
#include "collage_forge/dataset_io.hpp"
#include "collage_forge/errors.hpp"
#include "collage_forge/evaluation.hpp"
#include "collage_forge/image.hpp"
#include "collage_forge/ingestion.hpp"
#include "collage_forge/pipeline.hpp"
#include "collage_forge/rng.hpp"
