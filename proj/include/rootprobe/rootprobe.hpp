// Copyright 2026 The RootProbe Authors.
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

#ifndef ROOTPROBE_ROOTPROBE_HPP_
#define ROOTPROBE_ROOTPROBE_HPP_

#include "rootprobe/cli.hpp"
#include "rootprobe/dataset.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/models.hpp"
#include "rootprobe/pipeline.hpp"
#include "rootprobe/reducer.hpp"
#include "rootprobe/remote.hpp"
#include "rootprobe/report.hpp"
#include "rootprobe/surrogate.hpp"
#include "rootprobe/text.hpp"

#endif  // ROOTPROBE_ROOTPROBE_HPP_
