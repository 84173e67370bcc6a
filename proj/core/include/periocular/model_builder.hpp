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

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace periocular {

using AttributeValue =
    std::variant<std::int64_t, float, std::string, std::vector<std::int64_t>, std::vector<float>>;
using NodeAttributes = std::vector<std::pair<std::string, AttributeValue>>;

/// Small programmatic writer for ONNX models: one float NCHW input, float
/// or int64 initializers, nodes in insertion order, opset 13. Used to build
/// test networks and the bundled toy model.
class ModelBuilder {
 public:
  ModelBuilder(std::string graph_name, std::vector<std::int64_t> input_shape, std::string input_name = "input");

  ModelBuilder& initializer(const std::string& name, std::vector<std::int64_t> shape, std::vector<float> values);
  ModelBuilder& int64_initializer(const std::string& name, std::vector<std::int64_t> shape,
                                  std::vector<std::int64_t> values);
  ModelBuilder& node(const std::string& op_type, std::vector<std::string> inputs, std::vector<std::string> outputs,
                     NodeAttributes attributes = {}, const std::string& name = "");
  /// Declared graph output; defaults to the first output of the last node.
  /// Dimensions of -1 are left symbolic.
  ModelBuilder& output(const std::string& name, std::vector<std::int64_t> shape = {});

  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

 private:
  struct Init {
    std::string name;
    std::vector<std::int64_t> shape;
    std::vector<float> f;
    std::vector<std::int64_t> i;
    bool is_int = false;
  };
  struct NodeSpec {
    std::string op_type;
    std::string name;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    NodeAttributes attributes;
  };

  std::string graph_name_;
  std::string input_name_;
  std::vector<std::int64_t> input_shape_;
  std::vector<Init> inits_;
  std::vector<NodeSpec> nodes_;
  std::string output_;
  std::vector<std::int64_t> output_shape_;
};

/// The six-layer network shipped as models/toy_cnn.onnx: 3x32x32 input,
/// conv1 (4 filters, 3x3, pad 1), relu1, pool1 (2x2 max), conv2 (8 filters,
/// 3x3, pad 1), relu2, gap (global average pool). Weights are drawn from a
/// seeded generator, so the bytes are identical on every platform.
std::string toy_model_bytes(std::uint64_t seed = 7);

}  // namespace periocular
