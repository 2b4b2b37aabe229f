/*
 * Copyright 2026 The maskopt Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace maskopt {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A precondition on a scalar argument or configuration value was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated external data (IDX, netpbm, model file, config).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Model file checksum did not match its contents.
class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Model file magic / version is not one this build understands.
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

// The mask optimizer produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace maskopt
