// Copyright 2026 The convbeam Authors. All Rights Reserved.
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

#include "convbeam/audio_io.hpp"
#include "convbeam/error.hpp"
#include "convbeam/linalg.hpp"
#include "convbeam/metrics.hpp"
#include "convbeam/mvdr.hpp"
#include "convbeam/parallel.hpp"
#include "convbeam/pipeline.hpp"
#include "convbeam/scene_io.hpp"
#include "convbeam/simulator.hpp"
#include "convbeam/spectrogram.hpp"
#include "convbeam/stft.hpp"
#include "convbeam/tf_masks.hpp"
#include "convbeam/wpd.hpp"
#include "convbeam/wpe.hpp"
