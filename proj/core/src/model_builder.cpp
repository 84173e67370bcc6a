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


#include "periocular/model_builder.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "onnx.pb.h"
#include "periocular/error.hpp"

namespace periocular {

ModelBuilder::ModelBuilder(std::string graph_name, std::vector<std::int64_t> input_shape, std::string input_name)
    : graph_name_(std::move(graph_name)), input_name_(std::move(input_name)), input_shape_(std::move(input_shape)) {}

ModelBuilder& ModelBuilder::initializer(const std::string& name, std::vector<std::int64_t> shape,
                                        std::vector<float> values) {
  inits_.push_back({name, std::move(shape), std::move(values), {}, false});
  return *this;
}

ModelBuilder& ModelBuilder::int64_initializer(const std::string& name, std::vector<std::int64_t> shape,
                                              std::vector<std::int64_t> values) {
  inits_.push_back({name, std::move(shape), {}, std::move(values), true});
  return *this;
}

ModelBuilder& ModelBuilder::node(const std::string& op_type, std::vector<std::string> inputs,
                                 std::vector<std::string> outputs, NodeAttributes attributes, const std::string& name) {
  nodes_.push_back({op_type, name.empty() ? outputs.at(0) : name, std::move(inputs), std::move(outputs),
                    std::move(attributes)});
  return *this;
}

ModelBuilder& ModelBuilder::output(const std::string& name, std::vector<std::int64_t> shape) {
  output_ = name;
  output_shape_ = std::move(shape);
  return *this;
}

namespace {

struct AttributeWriter {
  onnx::AttributeProto& a;
  void operator()(std::int64_t v) const {
    a.set_type(onnx::AttributeProto::INT);
    a.set_i(v);
  }
  void operator()(float v) const {
    a.set_type(onnx::AttributeProto::FLOAT);
    a.set_f(v);
  }
  void operator()(const std::string& v) const {
    a.set_type(onnx::AttributeProto::STRING);
    a.set_s(v);
  }
  void operator()(const std::vector<std::int64_t>& v) const {
    a.set_type(onnx::AttributeProto::INTS);
    for (auto x : v) a.add_ints(x);
  }
  void operator()(const std::vector<float>& v) const {
    a.set_type(onnx::AttributeProto::FLOATS);
    for (auto x : v) a.add_floats(x);
  }
};

}  // namespace

std::string ModelBuilder::serialize() const {
  onnx::ModelProto model;
  model.set_ir_version(7);
  model.set_producer_name("periocular");
  auto* opset = model.add_opset_import();
  opset->set_domain("");
  opset->set_version(13);

  auto* g = model.mutable_graph();
  g->set_name(graph_name_);
  auto* in = g->add_input();
  in->set_name(input_name_);
  auto* tt = in->mutable_type()->mutable_tensor_type();
  tt->set_elem_type(onnx::TensorProto::FLOAT);
  for (auto d : input_shape_) tt->mutable_shape()->add_dim()->set_dim_value(d);

  for (const auto& init : inits_) {
    auto* t = g->add_initializer();
    t->set_name(init.name);
    for (auto d : init.shape) t->add_dims(d);
    if (init.is_int) {
      t->set_data_type(onnx::TensorProto::INT64);
      for (auto v : init.i) t->add_int64_data(v);
    } else {
      t->set_data_type(onnx::TensorProto::FLOAT);
      for (auto v : init.f) t->add_float_data(v);
    }
  }
  for (const auto& def : nodes_) {
    auto* n = g->add_node();
    n->set_op_type(def.op_type);
    n->set_name(def.name);
    for (const auto& s : def.inputs) n->add_input(s);
    for (const auto& s : def.outputs) n->add_output(s);
    for (const auto& [key, value] : def.attributes) {
      auto* a = n->add_attribute();
      a->set_name(key);
      std::visit(AttributeWriter{*a}, value);
    }
  }
  std::string out_name = output_;
  if (out_name.empty() && !nodes_.empty()) out_name = nodes_.back().outputs.at(0);
  if (!out_name.empty()) {
    auto* out = g->add_output();
    out->set_name(out_name);
    auto* ot = out->mutable_type()->mutable_tensor_type();
    ot->set_elem_type(onnx::TensorProto::FLOAT);
    auto* shape = ot->mutable_shape();
    for (std::size_t k = 0; k < output_shape_.size(); ++k) {
      auto* dim = shape->add_dim();
      if (output_shape_[k] >= 0)
        dim->set_dim_value(output_shape_[k]);
      else
        dim->set_dim_param("d" + std::to_string(k));
    }
  }
  std::string bytes;
  if (!model.SerializeToString(&bytes)) throw Error("failed to serialize model");
  return bytes;
}

void ModelBuilder::save(const std::filesystem::path& path) const {
  const std::string bytes = serialize();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::string toy_model_bytes(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // Uniform in [-bound, bound) from the top 53 bits; portable across libraries.
  const auto draw = [&](std::size_t n, double bound) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(bound * (2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0));
    return v;
  };
  const double b1 = std::sqrt(6.0 / (3 * 9)), b2 = std::sqrt(6.0 / (4 * 9));
  ModelBuilder mb("toy_cnn", {1, 3, 32, 32});
  mb.initializer("conv1.weight", {4, 3, 3, 3}, draw(4 * 3 * 9, b1))
      .initializer("conv1.bias", {4}, draw(4, 0.1))
      .initializer("conv2.weight", {8, 4, 3, 3}, draw(8 * 4 * 9, b2))
      .initializer("conv2.bias", {8}, draw(8, 0.1));
  const std::vector<std::int64_t> pad1 = {1, 1, 1, 1};
  mb.node("Conv", {"input", "conv1.weight", "conv1.bias"}, {"conv1"},
          {{"kernel_shape", std::vector<std::int64_t>{3, 3}}, {"pads", pad1}})
      .node("Relu", {"conv1"}, {"relu1"})
      .node("MaxPool", {"relu1"}, {"pool1"},
            {{"kernel_shape", std::vector<std::int64_t>{2, 2}}, {"strides", std::vector<std::int64_t>{2, 2}}})
      .node("Conv", {"pool1", "conv2.weight", "conv2.bias"}, {"conv2"},
            {{"kernel_shape", std::vector<std::int64_t>{3, 3}}, {"pads", pad1}})
      .node("Relu", {"conv2"}, {"relu2"})
      .node("GlobalAveragePool", {"relu2"}, {"gap"})
      .output("gap", {1, 8, 1, 1});
  return mb.serialize();
}

}  // namespace periocular
