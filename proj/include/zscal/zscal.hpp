/* Copyright 2026 The zscal Authors. All Rights Reserved.

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

#ifndef ZSCAL_ZSCAL_HPP_
#define ZSCAL_ZSCAL_HPP_

#include "zscal/calibration.hpp"
#include "zscal/ctc.hpp"
#include "zscal/error.hpp"
#include "zscal/eval.hpp"
#include "zscal/io.hpp"
#include "zscal/null_audio.hpp"
#include "zscal/oracle.hpp"
#include "zscal/pipeline.hpp"
#include "zscal/report.hpp"
#include "zscal/score_core.hpp"
#include "zscal/synth.hpp"

#endif  // ZSCAL_ZSCAL_HPP_
