// Copyright 2026 The diffsub Authors.
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

#ifndef DIFFSUB_DIFFSUB_HPP_
#define DIFFSUB_DIFFSUB_HPP_

#include "diffsub/autodiff.hpp"
#include "diffsub/datagen.hpp"
#include "diffsub/dcsg.hpp"
#include "diffsub/dol.hpp"
#include "diffsub/experiments.hpp"
#include "diffsub/io.hpp"
#include "diffsub/maximize.hpp"
#include "diffsub/mlp.hpp"
#include "diffsub/multilinear.hpp"
#include "diffsub/setfn.hpp"

#endif  // DIFFSUB_DIFFSUB_HPP_
