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

// Reference CPU interpreter for the ONNX operator subset found in classic
// image classification networks (AlexNet, VGG, GoogLeNet, ResNet). Single
// threaded and evaluated in graph order, so results are bit-reproducible.
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace periocular::onnx_engine {

enum class DType { f32, i64 };

struct Tensor {
  DType dtype = DType::f32;
  std::vector<std::int64_t> shape;
  std::vector<float> f;
  std::vector<std::int64_t> i;

  std::int64_t numel() const;
};

struct Attribute {
  enum class Kind { none, i, f, s, ints, floats, tensor } kind = Kind::none;
  std::int64_t i = 0;
  float f = 0.0f;
  std::string s;
  std::vector<std::int64_t> ints;
  std::vector<float> floats;
  Tensor t;
};

struct Node {
  std::string name;
  std::string op_type;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, Attribute> attrs;

  std::int64_t int_attr(const std::string& key, std::int64_t fallback) const;
  float float_attr(const std::string& key, float fallback) const;
  std::string string_attr(const std::string& key, const std::string& fallback) const;
  std::vector<std::int64_t> ints_attr(const std::string& key, std::vector<std::int64_t> fallback) const;
};

class Graph {
 public:
  /// Parses a serialized ModelProto. Throws ModelLoadError / UnsupportedOperator.
  static Graph parse(const std::string& bytes, const std::string& fallback_name);

  const std::string& name() const { return name_; }
  const std::string& input_name() const { return input_name_; }
  const std::vector<std::int64_t>& input_shape() const { return input_shape_; }
  /// Every node output in topological order.
  const std::vector<std::string>& tensor_names() const { return tensor_names_; }

  /// Evaluates nodes in order until every tensor in `capture` exists.
  std::map<std::string, Tensor> run(const Tensor& input, const std::set<std::string>& capture) const;

 private:
  std::string name_;
  std::string input_name_;
  std::vector<std::int64_t> input_shape_;
  std::int64_t opset_ = 13;
  std::vector<Node> nodes_;
  std::map<std::string, Tensor> initializers_;
  std::vector<std::string> tensor_names_;
};

bool is_supported_op(const std::string& op_type);

}  // namespace periocular::onnx_engine
