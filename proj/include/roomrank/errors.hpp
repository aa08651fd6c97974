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
#ifndef ROOMRANK_ERRORS_HPP_
#define ROOMRANK_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace roomrank {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read or written.
struct IoError : Error {
  using Error::Error;
};

// A WAV file violates the subset of RIFF this library supports.
struct WavFormatError : Error {
  using Error::Error;
};

// A caller violated an operation precondition.
struct InvalidArgument : Error {
  using Error::Error;
};

// An impulse response has no usable decay tail.
struct InsufficientDecayError : Error {
  using Error::Error;
};

// A model file is corrupt, truncated or of an unknown version.
struct ModelFormatError : Error {
  using Error::Error;
};

// A dataset or corpus operation produced nothing to work with.
struct DatasetError : Error {
  using Error::Error;
};

}  // namespace roomrank

#endif  // ROOMRANK_ERRORS_HPP_
