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


#include "periocular/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include "csv.hpp"
#include "hash.hpp"
#include "onnx_graph.hpp"
#include "periocular/error.hpp"
#include "periocular/imageproc.hpp"
#include "periocular/parallel.hpp"

namespace periocular {

const onnx_engine::Graph& network_graph(const NetworkHandle& net) {
  if (!net.graph_) throw InvalidInput("network handle is empty");
  return *net.graph_;
}

bool NetworkHandle::has_layer(const std::string& layer) const {
  return std::find(layer_names_.begin(), layer_names_.end(), layer) != layer_names_.end();
}

NetworkHandle load_network_bytes(const std::string& bytes, const std::string& model_id) {
  auto graph = std::make_shared<onnx_engine::Graph>(onnx_engine::Graph::parse(bytes, model_id));
  NetworkHandle net;
  net.model_id_ = graph->name();
  net.digest_ = sha256_hex(bytes);
  const auto& shape = graph->input_shape();
  net.input_channels_ = static_cast<int>(shape[1]);
  net.input_height_ = static_cast<int>(shape[2]);
  net.input_width_ = static_cast<int>(shape[3]);
  net.layer_names_ = graph->tensor_names();
  if (net.layer_names_.empty()) throw ModelLoadError("model exposes no layers");
  net.graph_ = std::move(graph);
  return net;
}

NetworkHandle load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return load_network_bytes(bytes, path.stem().string());
}

std::vector<LayerActivation> extract_activations(const NetworkHandle& net, const GrayImage& img,
                                                 const std::vector<std::string>& layers) {
  const auto& graph = network_graph(net);
  for (const auto& layer : layers)
    if (!net.has_layer(layer)) throw InvalidLayer(layer);
  if (img.width() != net.input_width() || img.height() != net.input_height())
    throw InvalidInput("image is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                       ", network expects " + std::to_string(net.input_width()) + "x" +
                       std::to_string(net.input_height()));

  onnx_engine::Tensor input;
  input.shape = graph.input_shape();
  const std::size_t plane = img.size();
  input.f.resize(plane * static_cast<std::size_t>(net.input_channels()));
  const auto px = img.pixels();
  for (int c = 0; c < net.input_channels(); ++c)
    std::transform(px.begin(), px.end(), input.f.begin() + static_cast<std::ptrdiff_t>(c * plane),
                   [](double v) { return static_cast<float>(v); });

  const std::set<std::string> wanted(layers.begin(), layers.end());
  auto tensors = graph.run(input, wanted);
  std::vector<LayerActivation> out;
  out.reserve(layers.size());
  for (const auto& layer : layers) {
    const onnx_engine::Tensor& t = tensors.at(layer);
    LayerActivation act;
    act.layer_name = layer;
    act.original_shape = t.shape;
    if (t.dtype == onnx_engine::DType::f32) {
      act.values = t.f;
    } else {
      act.values.reserve(t.i.size());
      for (auto v : t.i) act.values.push_back(static_cast<float>(v));
    }
    for (float v : act.values)
      if (!std::isfinite(v)) throw InvalidInput("layer " + layer + " produced a non-finite activation");
    out.push_back(std::move(act));
  }
  return out;
}

LayerActivation extract_activation(const NetworkHandle& net, const GrayImage& img, const std::string& layer) {
  return std::move(extract_activations(net, img, {layer}).front());
}

MeanSubtracted prepare_network_inputs(const NetworkHandle& net, const std::vector<GrayImage>& rois) {
  std::vector<GrayImage> resized;
  resized.reserve(rois.size());
  for (const auto& roi : rois) resized.push_back(resize_bicubic(roi, net.input_width(), net.input_height()));
  return mean_subtract(resized);
}

std::vector<SweepRow> layer_sweep(const NetworkHandle& net, const std::vector<SweepSample>& dataset,
                                  const std::vector<Metric>& metrics, const SweepOptions& options) {
  if (metrics.empty()) throw InvalidInput("layer sweep needs at least one metric");
  std::vector<ProtocolImage> protocol;
  std::vector<GrayImage> rois;
  protocol.reserve(dataset.size());
  rois.reserve(dataset.size());
  for (const auto& s : dataset) {
    protocol.push_back(s.image);
    rois.push_back(s.roi);
  }
  const TrialList trials = build_trials(protocol);
  if (trials.users.size() < 2)
    throw InvalidInput("layer sweep needs at least 2 identities with at least 2 images each");

  std::vector<std::string> layers = options.layers.empty() ? net.layer_names() : options.layers;
  for (const auto& layer : layers)
    if (!net.has_layer(layer)) throw InvalidLayer(layer);
  // Keep network order regardless of how the caller listed the layers.
  std::stable_sort(layers.begin(), layers.end(), [&](const std::string& a, const std::string& b) {
    const auto& names = net.layer_names();
    return std::find(names.begin(), names.end(), a) < std::find(names.begin(), names.end(), b);
  });

  const MeanSubtracted inputs = prepare_network_inputs(net, rois);
  // features[image][layer]
  std::vector<std::vector<LayerActivation>> features(dataset.size());
  parallel_for(dataset.size(), options.workers,
               [&](std::size_t i) { features[i] = extract_activations(net, inputs.residuals[i], layers); });

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < dataset.size(); ++i) index[dataset[i].image.image_id] = i;

  std::vector<SweepRow> rows;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    float min_value = 0.0f;
    for (const auto& f : features)
      for (float v : f[l].values) min_value = std::min(min_value, v);
    std::vector<std::vector<float>> shifted;
    for (Metric metric : metrics) {
      const bool shift = metric == Metric::chi2 && min_value < 0.0f;
      if (shift && shifted.empty()) {
        shifted.resize(features.size());
        for (std::size_t i = 0; i < features.size(); ++i) {
          shifted[i] = features[i][l].values;
          for (float& v : shifted[i]) v -= min_value;
        }
      }
      const auto values = [&](const std::string& id) -> std::span<const float> {
        const std::size_t i = index.at(id);
        return shift ? std::span<const float>(shifted[i]) : std::span<const float>(features[i][l].values);
      };
      const ScoreSet scores = score_trials(
          trials, [&](const std::string& a, const std::string& b) { return similarity(metric, values(a), values(b)); },
          layers[l] + "/" + to_string(metric), options.workers);
      rows.push_back({layers[l], metric, 100.0 * compute_det(scores).eer});
    }
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "layer,metric,eer_percent\n";
  for (const auto& r : rows) csv::require_plain_field(r.layer);
  for (const auto& r : rows) out << r.layer << ',' << to_string(r.metric) << ',' << format_double(r.eer_percent) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace periocular
