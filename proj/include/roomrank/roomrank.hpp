/* Copyright 2026 The RoomRank Authors. All Rights Reserved.

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
#ifndef ROOMRANK_ROOMRANK_HPP_
#define ROOMRANK_ROOMRANK_HPP_

#include "roomrank/audio.hpp"
#include "roomrank/convolve.hpp"
#include "roomrank/corpus.hpp"
#include "roomrank/dataset.hpp"
#include "roomrank/errors.hpp"
#include "roomrank/features.hpp"
#include "roomrank/fft.hpp"
#include "roomrank/parallel.hpp"
#include "roomrank/ranker.hpp"
#include "roomrank/rir.hpp"
#include "roomrank/rng.hpp"
#include "roomrank/scorer.hpp"
#include "roomrank/train.hpp"
#include "roomrank/wav.hpp"

#endif  // ROOMRANK_ROOMRANK_HPP_
