// Copyright 2026 The Periocular Toolkit Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace periocular {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad dimensions, empty input,
/// mismatched lengths, single-class labels, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed beyond the tolerated fraction (manifests, runs).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A model file could not be parsed into a usable graph.
class ModelLoadError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperator : public ModelLoadError {
 public:
  explicit UnsupportedOperator(const std::string& op)
      : ModelLoadError("unsupported operator: " + op), op_(op) {}
  const std::string& op_type() const noexcept { return op_; }

 private:
  std::string op_;
};

class InvalidLayer : public Error {
 public:
  explicit InvalidLayer(const std::string& layer)
      : Error("unknown layer: " + layer) {}
};

}  // namespace periocular
