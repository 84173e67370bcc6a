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
#include <memory>
#include <string>
#include <vector>

#include "periocular/eval.hpp"
#include "periocular/image.hpp"
#include "periocular/metrics.hpp"

namespace periocular {

namespace onnx_engine {
class Graph;
}

/// A loaded network. Immutable and cheap to copy; copies share the graph,
/// and concurrent forward passes on one handle are safe.
class NetworkHandle {
 public:
  const std::string& model_id() const noexcept { return model_id_; }
  int input_width() const noexcept { return input_width_; }
  int input_height() const noexcept { return input_height_; }
  int input_channels() const noexcept { return input_channels_; }
  /// Every node output, in topological order.
  const std::vector<std::string>& layer_names() const noexcept { return layer_names_; }
  bool has_layer(const std::string& layer) const;
  /// SHA-256 of the serialized model.
  const std::string& digest() const noexcept { return digest_; }

 private:
  friend NetworkHandle load_network_bytes(const std::string&, const std::string&);
  friend const onnx_engine::Graph& network_graph(const NetworkHandle&);

  std::string model_id_;
  std::string digest_;
  int input_width_ = 0;
  int input_height_ = 0;
  int input_channels_ = 0;
  std::vector<std::string> layer_names_;
  std::shared_ptr<const onnx_engine::Graph> graph_;
};

/// Loads an ONNX model file. The model id is the graph name, or the file
/// stem when the graph is unnamed. Throws IoError, ModelLoadError, or
/// UnsupportedOperator (a ModelLoadError naming the operator).
NetworkHandle load_network(const std::filesystem::path& path);
NetworkHandle load_network_bytes(const std::string& bytes, const std::string& model_id);

struct LayerActivation {
  std::string layer_name;
  std::vector<float> values;
  std::vector<std::int64_t> original_shape;
};

/// Runs one forward pass on `img`, which must already have the network's
/// input size. The single channel is copied into every input channel.
LayerActivation extract_activation(const NetworkHandle& net, const GrayImage& img, const std::string& layer);

/// Same as extract_activation for several layers from one forward pass,
/// returned in the order requested.
std::vector<LayerActivation> extract_activations(const NetworkHandle& net, const GrayImage& img,
                                                 const std::vector<std::string>& layers);

/// Resizes every ROI to the network input size and subtracts the pixel-wise
/// mean of the resized set.
MeanSubtracted prepare_network_inputs(const NetworkHandle& net, const std::vector<GrayImage>& rois);

/// One image of a layer sweep: protocol identity plus its ROI.
struct SweepSample {
  ProtocolImage image;
  GrayImage roi;
};

struct SweepRow {
  std::string layer;
  Metric metric = Metric::euclidean;
  double eer_percent = 0.0;
};

struct SweepOptions {
  /// Empty means every layer of the network.
  std::vector<std::string> layers;
  int workers = 1;
};

/// Extracts every requested layer for every sample and runs the verification
/// protocol per (layer, metric). Rows follow layer order, then metric order.
/// For chi2, a layer whose features go negative anywhere in the dataset is
/// shifted by its dataset-wide minimum first.
std::vector<SweepRow> layer_sweep(const NetworkHandle& net, const std::vector<SweepSample>& dataset,
                                  const std::vector<Metric>& metrics, const SweepOptions& options = {});

/// CSV `layer,metric,eer_percent`.
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace periocular
