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

#include "onnx_graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>

#include "onnx.pb.h"
#include "periocular/error.hpp"

namespace periocular::onnx_engine {

namespace {

using Shape = std::vector<std::int64_t>;

const std::set<std::string>& supported_ops() {
  static const std::set<std::string> ops = {
      "Conv",        "Relu",      "LeakyRelu",         "Sigmoid",         "Tanh",
      "Clip",        "MaxPool",   "AveragePool",       "GlobalAveragePool", "GlobalMaxPool",
      "Gemm",        "MatMul",    "Add",               "Sub",             "Mul",
      "Div",         "Flatten",   "Reshape",           "Dropout",         "Identity",
      "BatchNormalization", "Softmax", "LRN",           "Concat",          "Constant"};
  return ops;
}

std::int64_t product(const Shape& s, std::size_t from = 0, std::size_t to = std::string::npos) {
  to = std::min(to, s.size());
  std::int64_t p = 1;
  for (std::size_t k = from; k < to; ++k) p *= s[k];
  return p;
}

[[noreturn]] void fail(const Node& node, const std::string& what) {
  throw InvalidInput(node.op_type + " '" + node.name + "': " + what);
}

Tensor make_f32(Shape shape) {
  Tensor t;
  t.dtype = DType::f32;
  t.f.assign(static_cast<std::size_t>(product(shape)), 0.0f);
  t.shape = std::move(shape);
  return t;
}

float read_le_f32(const char* p) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[k])) << (8 * k);
  return std::bit_cast<float>(v);
}

std::uint64_t read_le_u64(const char* p) {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[k])) << (8 * k);
  return v;
}

Tensor from_proto(const onnx::TensorProto& tp) {
  if (tp.data_location() == onnx::TensorProto::EXTERNAL)
    throw ModelLoadError("tensor '" + tp.name() + "' uses external data, which is not supported");
  Tensor t;
  t.shape.assign(tp.dims().begin(), tp.dims().end());
  const auto n = static_cast<std::size_t>(product(t.shape));
  const std::string& raw = tp.raw_data();
  switch (tp.data_type()) {
    case onnx::TensorProto::FLOAT:
      t.dtype = DType::f32;
      if (!raw.empty()) {
        if (raw.size() != n * 4) throw ModelLoadError("raw data size mismatch in '" + tp.name() + "'");
        t.f.resize(n);
        for (std::size_t k = 0; k < n; ++k) t.f[k] = read_le_f32(raw.data() + 4 * k);
      } else {
        t.f.assign(tp.float_data().begin(), tp.float_data().end());
      }
      if (t.f.size() != n) throw ModelLoadError("float tensor '" + tp.name() + "' has wrong element count");
      break;
    case onnx::TensorProto::DOUBLE:
      t.dtype = DType::f32;
      if (!raw.empty()) {
        if (raw.size() != n * 8) throw ModelLoadError("raw data size mismatch in '" + tp.name() + "'");
        t.f.resize(n);
        for (std::size_t k = 0; k < n; ++k)
          t.f[k] = static_cast<float>(std::bit_cast<double>(read_le_u64(raw.data() + 8 * k)));
      } else {
        for (double v : tp.double_data()) t.f.push_back(static_cast<float>(v));
      }
      if (t.f.size() != n) throw ModelLoadError("double tensor '" + tp.name() + "' has wrong element count");
      break;
    case onnx::TensorProto::INT64:
      t.dtype = DType::i64;
      if (!raw.empty()) {
        if (raw.size() != n * 8) throw ModelLoadError("raw data size mismatch in '" + tp.name() + "'");
        t.i.resize(n);
        for (std::size_t k = 0; k < n; ++k)
          t.i[k] = static_cast<std::int64_t>(read_le_u64(raw.data() + 8 * k));
      } else {
        t.i.assign(tp.int64_data().begin(), tp.int64_data().end());
      }
      if (t.i.size() != n) throw ModelLoadError("int64 tensor '" + tp.name() + "' has wrong element count");
      break;
    case onnx::TensorProto::INT32:
      t.dtype = DType::i64;
      if (!raw.empty()) {
        if (raw.size() != n * 4) throw ModelLoadError("raw data size mismatch in '" + tp.name() + "'");
        t.i.resize(n);
        for (std::size_t k = 0; k < n; ++k)
          t.i[k] = static_cast<std::int32_t>(std::bit_cast<std::uint32_t>(read_le_f32(raw.data() + 4 * k)));
      } else {
        t.i.assign(tp.int32_data().begin(), tp.int32_data().end());
      }
      if (t.i.size() != n) throw ModelLoadError("int32 tensor '" + tp.name() + "' has wrong element count");
      break;
    default:
      throw ModelLoadError("tensor '" + tp.name() + "' has unsupported element type " +
                           std::to_string(tp.data_type()));
  }
  return t;
}

Attribute from_proto(const onnx::AttributeProto& ap) {
  Attribute a;
  switch (ap.type()) {
    case onnx::AttributeProto::INT: a.kind = Attribute::Kind::i; a.i = ap.i(); break;
    case onnx::AttributeProto::FLOAT: a.kind = Attribute::Kind::f; a.f = ap.f(); break;
    case onnx::AttributeProto::STRING: a.kind = Attribute::Kind::s; a.s = ap.s(); break;
    case onnx::AttributeProto::INTS:
      a.kind = Attribute::Kind::ints;
      a.ints.assign(ap.ints().begin(), ap.ints().end());
      break;
    case onnx::AttributeProto::FLOATS:
      a.kind = Attribute::Kind::floats;
      a.floats.assign(ap.floats().begin(), ap.floats().end());
      break;
    case onnx::AttributeProto::TENSOR: a.kind = Attribute::Kind::tensor; a.t = from_proto(ap.t()); break;
    default: a.kind = Attribute::Kind::none; break;
  }
  return a;
}

// ---------------------------------------------------------------- kernels

const Tensor& f32_input(const Node& node, const std::vector<const Tensor*>& in, std::size_t k) {
  if (k >= in.size() || in[k] == nullptr) fail(node, "missing input " + std::to_string(k));
  if (in[k]->dtype != DType::f32) fail(node, "input " + std::to_string(k) + " must be float");
  return *in[k];
}

Tensor unary(const Node& node, const std::vector<const Tensor*>& in, const std::function<float(float)>& fn) {
  const Tensor& x = f32_input(node, in, 0);
  Tensor y = x;
  for (float& v : y.f) v = fn(v);
  return y;
}

Shape broadcast_shape(const Node& node, const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t k = 0; k < r; ++k) {
    const std::int64_t da = k < r - a.size() ? 1 : a[k - (r - a.size())];
    const std::int64_t db = k < r - b.size() ? 1 : b[k - (r - b.size())];
    if (da != db && da != 1 && db != 1) fail(node, "shapes are not broadcastable");
    out[k] = std::max(da, db);
  }
  return out;
}

Tensor binary(const Node& node, const std::vector<const Tensor*>& in,
              const std::function<float(float, float)>& fn) {
  const Tensor& a = f32_input(node, in, 0);
  const Tensor& b = f32_input(node, in, 1);
  const Shape shape = broadcast_shape(node, a.shape, b.shape);
  Tensor y = make_f32(shape);
  const std::size_t r = shape.size();
  const auto strides_for = [&](const Shape& s) {
    Shape st(r, 0);
    std::int64_t acc = 1;
    for (std::size_t k = s.size(); k-- > 0;) {
      const std::size_t dim = k + (r - s.size());
      st[dim] = s[k] == 1 ? 0 : acc;
      acc *= s[k];
    }
    return st;
  };
  const Shape sa = strides_for(a.shape), sb = strides_for(b.shape);
  Shape idx(r, 0);
  for (std::size_t lin = 0; lin < y.f.size(); ++lin) {
    std::int64_t ia = 0, ib = 0;
    for (std::size_t k = 0; k < r; ++k) {
      ia += idx[k] * sa[k];
      ib += idx[k] * sb[k];
    }
    y.f[lin] = fn(a.f[static_cast<std::size_t>(ia)], b.f[static_cast<std::size_t>(ib)]);
    for (std::size_t k = r; k-- > 0;) {
      if (++idx[k] < shape[k]) break;
      idx[k] = 0;
    }
  }
  return y;
}

struct Window2d {
  std::int64_t kh = 1, kw = 1;
  std::int64_t sh = 1, sw = 1;
  std::int64_t dh = 1, dw = 1;
  std::int64_t pt = 0, pl = 0, pb = 0, pr = 0;
  std::int64_t oh = 0, ow = 0;
};

Window2d window(const Node& node, std::int64_t h, std::int64_t w, std::int64_t kh, std::int64_t kw,
                bool ceil_mode) {
  Window2d win;
  win.kh = kh;
  win.kw = kw;
  const auto strides = node.ints_attr("strides", {1, 1});
  const auto dil = node.ints_attr("dilations", {1, 1});
  if (strides.size() != 2 || dil.size() != 2) fail(node, "only 2-D windows are supported");
  win.sh = strides[0];
  win.sw = strides[1];
  win.dh = dil[0];
  win.dw = dil[1];
  if (win.sh < 1 || win.sw < 1 || win.dh < 1 || win.dw < 1) fail(node, "bad stride or dilation");
  const std::string auto_pad = node.string_attr("auto_pad", "NOTSET");
  const std::int64_t ekh = win.dh * (kh - 1) + 1, ekw = win.dw * (kw - 1) + 1;
  if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
    win.oh = (h + win.sh - 1) / win.sh;
    win.ow = (w + win.sw - 1) / win.sw;
    const std::int64_t th = std::max<std::int64_t>(0, (win.oh - 1) * win.sh + ekh - h);
    const std::int64_t tw = std::max<std::int64_t>(0, (win.ow - 1) * win.sw + ekw - w);
    const bool upper = auto_pad == "SAME_UPPER";
    win.pt = upper ? th / 2 : th - th / 2;
    win.pb = th - win.pt;
    win.pl = upper ? tw / 2 : tw - tw / 2;
    win.pr = tw - win.pl;
    return win;
  }
  if (auto_pad == "NOTSET") {
    const auto pads = node.ints_attr("pads", {0, 0, 0, 0});
    if (pads.size() != 4) fail(node, "pads must have 4 entries");
    win.pt = pads[0];
    win.pl = pads[1];
    win.pb = pads[2];
    win.pr = pads[3];
  } else if (auto_pad != "VALID") {
    fail(node, "unknown auto_pad " + auto_pad);
  }
  const auto out_dim = [&](std::int64_t in, std::int64_t pb, std::int64_t pe, std::int64_t ek, std::int64_t s) {
    const std::int64_t span = in + pb + pe - ek;
    if (span < 0) fail(node, "window larger than padded input");
    std::int64_t o = (ceil_mode ? (span + s - 1) / s : span / s) + 1;
    if (ceil_mode && (o - 1) * s >= in + pb) --o;
    return o;
  };
  win.oh = out_dim(h, win.pt, win.pb, ekh, win.sh);
  win.ow = out_dim(w, win.pl, win.pr, ekw, win.sw);
  return win;
}

Tensor conv(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = f32_input(node, in, 0);
  const Tensor& wt = f32_input(node, in, 1);
  const Tensor* bias = in.size() > 2 ? in[2] : nullptr;
  if (x.shape.size() != 4 || wt.shape.size() != 4) fail(node, "only 2-D convolution is supported");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const std::int64_t m = wt.shape[0], cg = wt.shape[1], kh = wt.shape[2], kw = wt.shape[3];
  const std::int64_t group = node.int_attr("group", 1);
  if (group < 1 || c != cg * group || m % group != 0) fail(node, "channel/group mismatch");
  if (bias && (bias->dtype != DType::f32 || bias->numel() != m)) fail(node, "bias length mismatch");
  const Window2d win = window(node, h, w, kh, kw, false);

  Tensor y = make_f32({n, m, win.oh, win.ow});
  const std::int64_t m_per_g = m / group;
  std::vector<double> acc(static_cast<std::size_t>(win.oh * win.ow));
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t oc = 0; oc < m; ++oc) {
      const std::int64_t g = oc / m_per_g;
      std::fill(acc.begin(), acc.end(), bias ? static_cast<double>(bias->f[oc]) : 0.0);
      for (std::int64_t ic = 0; ic < cg; ++ic) {
        const float* plane = x.f.data() + ((b * c + g * cg + ic) * h) * w;
        for (std::int64_t ky = 0; ky < kh; ++ky) {
          for (std::int64_t kx = 0; kx < kw; ++kx) {
            const double wv = wt.f[((oc * cg + ic) * kh + ky) * kw + kx];
            if (wv == 0.0) continue;
            for (std::int64_t oy = 0; oy < win.oh; ++oy) {
              const std::int64_t iy = oy * win.sh - win.pt + ky * win.dh;
              if (iy < 0 || iy >= h) continue;
              for (std::int64_t ox = 0; ox < win.ow; ++ox) {
                const std::int64_t ix = ox * win.sw - win.pl + kx * win.dw;
                if (ix < 0 || ix >= w) continue;
                acc[oy * win.ow + ox] += wv * plane[iy * w + ix];
              }
            }
          }
        }
      }
      float* out = y.f.data() + (b * m + oc) * win.oh * win.ow;
      for (std::size_t k = 0; k < acc.size(); ++k) out[k] = static_cast<float>(acc[k]);
    }
  }
  return y;
}

Tensor pool(const Node& node, const std::vector<const Tensor*>& in, bool is_max) {
  const Tensor& x = f32_input(node, in, 0);
  if (x.shape.size() != 4) fail(node, "only 2-D pooling is supported");
  const auto k = node.ints_attr("kernel_shape", {});
  if (k.size() != 2) fail(node, "kernel_shape must have 2 entries");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const Window2d win = window(node, h, w, k[0], k[1], node.int_attr("ceil_mode", 0) != 0);
  const bool include_pad = node.int_attr("count_include_pad", 0) != 0;

  Tensor y = make_f32({n, c, win.oh, win.ow});
  for (std::int64_t p = 0; p < n * c; ++p) {
    const float* plane = x.f.data() + p * h * w;
    float* out = y.f.data() + p * win.oh * win.ow;
    for (std::int64_t oy = 0; oy < win.oh; ++oy) {
      for (std::int64_t ox = 0; ox < win.ow; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        std::int64_t count = 0, padded = 0;
        for (std::int64_t ky = 0; ky < win.kh; ++ky) {
          const std::int64_t iy = oy * win.sh - win.pt + ky * win.dh;
          for (std::int64_t kx = 0; kx < win.kw; ++kx) {
            const std::int64_t ix = ox * win.sw - win.pl + kx * win.dw;
            if (iy >= -win.pt && iy < h + win.pb && ix >= -win.pl && ix < w + win.pr) ++padded;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
            const double v = plane[iy * w + ix];
            best = std::max(best, v);
            sum += v;
            ++count;
          }
        }
        double v = 0.0;
        if (is_max) v = count ? best : 0.0;
        else v = (include_pad ? padded : count) > 0 ? sum / static_cast<double>(include_pad ? padded : count) : 0.0;
        out[oy * win.ow + ox] = static_cast<float>(v);
      }
    }
  }
  return y;
}

Tensor global_pool(const Node& node, const std::vector<const Tensor*>& in, bool is_max) {
  const Tensor& x = f32_input(node, in, 0);
  if (x.shape.size() < 3) fail(node, "input must have spatial dimensions");
  const std::int64_t nc = x.shape[0] * x.shape[1];
  const std::int64_t area = product(x.shape, 2);
  Shape shape = {x.shape[0], x.shape[1]};
  shape.resize(x.shape.size(), 1);
  Tensor y = make_f32(shape);
  for (std::int64_t p = 0; p < nc; ++p) {
    const float* plane = x.f.data() + p * area;
    double acc = is_max ? -std::numeric_limits<double>::infinity() : 0.0;
    for (std::int64_t k = 0; k < area; ++k) acc = is_max ? std::max<double>(acc, plane[k]) : acc + plane[k];
    y.f[p] = static_cast<float>(is_max ? acc : acc / static_cast<double>(area));
  }
  return y;
}

Tensor gemm(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& a = f32_input(node, in, 0);
  const Tensor& b = f32_input(node, in, 1);
  if (a.shape.size() != 2 || b.shape.size() != 2) fail(node, "Gemm inputs must be 2-D");
  const bool ta = node.int_attr("transA", 0) != 0, tb = node.int_attr("transB", 0) != 0;
  const double alpha = node.float_attr("alpha", 1.0f), beta = node.float_attr("beta", 1.0f);
  const std::int64_t m = ta ? a.shape[1] : a.shape[0];
  const std::int64_t k = ta ? a.shape[0] : a.shape[1];
  const std::int64_t kb = tb ? b.shape[1] : b.shape[0];
  const std::int64_t n = tb ? b.shape[0] : b.shape[1];
  if (k != kb) fail(node, "inner dimensions differ");
  Tensor y = make_f32({m, n});
  Tensor cb;
  const bool has_c = in.size() > 2 && in[2] != nullptr;
  if (has_c) {
    std::vector<const Tensor*> pair = {&y, in[2]};
    cb = binary(node, pair, [](float, float c) { return c; });
  }
  for (std::int64_t r = 0; r < m; ++r) {
    for (std::int64_t col = 0; col < n; ++col) {
      double acc = 0.0;
      for (std::int64_t t = 0; t < k; ++t) {
        const double av = ta ? a.f[t * a.shape[1] + r] : a.f[r * a.shape[1] + t];
        const double bv = tb ? b.f[col * b.shape[1] + t] : b.f[t * b.shape[1] + col];
        acc += av * bv;
      }
      double v = alpha * acc;
      if (has_c) v += beta * cb.f[r * n + col];
      y.f[r * n + col] = static_cast<float>(v);
    }
  }
  return y;
}

Tensor matmul(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& a = f32_input(node, in, 0);
  const Tensor& b = f32_input(node, in, 1);
  if (a.shape.size() < 2 || b.shape.size() != 2) fail(node, "only [...,M,K] x [K,N] MatMul is supported");
  const std::int64_t m = a.shape[a.shape.size() - 2], k = a.shape.back();
  if (b.shape[0] != k) fail(node, "inner dimensions differ");
  const std::int64_t n = b.shape[1];
  const std::int64_t batch = product(a.shape, 0, a.shape.size() - 2);
  Shape shape(a.shape.begin(), a.shape.end() - 1);
  shape.push_back(n);
  Tensor y = make_f32(shape);
  for (std::int64_t bt = 0; bt < batch; ++bt)
    for (std::int64_t r = 0; r < m; ++r)
      for (std::int64_t col = 0; col < n; ++col) {
        double acc = 0.0;
        for (std::int64_t t = 0; t < k; ++t)
          acc += static_cast<double>(a.f[(bt * m + r) * k + t]) * b.f[t * n + col];
        y.f[(bt * m + r) * n + col] = static_cast<float>(acc);
      }
  return y;
}

std::int64_t normalize_axis(const Node& node, std::int64_t axis, std::size_t rank, bool allow_rank = false) {
  const auto r = static_cast<std::int64_t>(rank);
  if (axis < 0) axis += r;
  if (axis < 0 || axis > r || (!allow_rank && axis == r)) fail(node, "axis out of range");
  return axis;
}

Tensor flatten(const Node& node, const std::vector<const Tensor*>& in) {
  Tensor y = f32_input(node, in, 0);
  const std::int64_t axis = normalize_axis(node, node.int_attr("axis", 1), y.shape.size(), true);
  y.shape = {product(y.shape, 0, axis), product(y.shape, axis)};
  return y;
}

Tensor reshape(const Node& node, const std::vector<const Tensor*>& in) {
  Tensor y = f32_input(node, in, 0);
  if (in.size() < 2 || in[1] == nullptr || in[1]->dtype != DType::i64) fail(node, "shape input must be int64");
  Shape target = in[1]->i;
  std::int64_t known = 1;
  int infer = -1;
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (target[k] == 0) {
      if (k >= y.shape.size()) fail(node, "zero dim beyond input rank");
      target[k] = y.shape[k];
    }
    if (target[k] == -1) {
      if (infer >= 0) fail(node, "more than one -1 in shape");
      infer = static_cast<int>(k);
    } else {
      known *= target[k];
    }
  }
  const std::int64_t total = y.numel();
  if (infer >= 0) {
    if (known == 0 || total % known != 0) fail(node, "cannot infer reshape dimension");
    target[infer] = total / known;
  }
  if (product(target) != total) fail(node, "reshape changes element count");
  y.shape = target;
  return y;
}

Tensor batch_norm(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = f32_input(node, in, 0);
  const Tensor& scale = f32_input(node, in, 1);
  const Tensor& b = f32_input(node, in, 2);
  const Tensor& mean = f32_input(node, in, 3);
  const Tensor& var = f32_input(node, in, 4);
  if (x.shape.size() < 2) fail(node, "input needs a channel axis");
  const std::int64_t n = x.shape[0], c = x.shape[1], area = product(x.shape, 2);
  if (scale.numel() != c || b.numel() != c || mean.numel() != c || var.numel() != c)
    fail(node, "per-channel parameter length mismatch");
  const double eps = node.float_attr("epsilon", 1e-5f);
  Tensor y = x;
  for (std::int64_t bt = 0; bt < n; ++bt)
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double s = scale.f[ch] / std::sqrt(static_cast<double>(var.f[ch]) + eps);
      const double shift = b.f[ch] - s * mean.f[ch];
      float* p = y.f.data() + (bt * c + ch) * area;
      for (std::int64_t k = 0; k < area; ++k) p[k] = static_cast<float>(s * p[k] + shift);
    }
  return y;
}

Tensor softmax(const Node& node, const std::vector<const Tensor*>& in, std::int64_t opset) {
  Tensor y = f32_input(node, in, 0);
  const std::size_t rank = y.shape.size();
  std::int64_t outer = 0, len = 0, inner = 0;
  if (opset >= 13) {
    const std::int64_t axis = normalize_axis(node, node.int_attr("axis", -1), rank);
    outer = product(y.shape, 0, axis);
    len = y.shape[axis];
    inner = product(y.shape, axis + 1);
  } else {
    const std::int64_t axis = normalize_axis(node, node.int_attr("axis", 1), rank);
    outer = product(y.shape, 0, axis);
    len = product(y.shape, axis);
    inner = 1;
  }
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t in_i = 0; in_i < inner; ++in_i) {
      const auto at = [&](std::int64_t k) -> float& { return y.f[(o * len + k) * inner + in_i]; };
      double mx = -std::numeric_limits<double>::infinity();
      for (std::int64_t k = 0; k < len; ++k) mx = std::max<double>(mx, at(k));
      double sum = 0.0;
      for (std::int64_t k = 0; k < len; ++k) sum += std::exp(at(k) - mx);
      for (std::int64_t k = 0; k < len; ++k) at(k) = static_cast<float>(std::exp(at(k) - mx) / sum);
    }
  return y;
}

Tensor lrn(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = f32_input(node, in, 0);
  if (x.shape.size() < 2) fail(node, "input needs a channel axis");
  const std::int64_t size = node.int_attr("size", 0);
  if (size < 1) fail(node, "size attribute is required");
  const double alpha = node.float_attr("alpha", 1e-4f), beta = node.float_attr("beta", 0.75f);
  const double bias = node.float_attr("bias", 1.0f);
  const std::int64_t n = x.shape[0], c = x.shape[1], area = product(x.shape, 2);
  const std::int64_t lo = (size - 1) / 2, hi = size - 1 - lo;
  Tensor y = x;
  for (std::int64_t bt = 0; bt < n; ++bt)
    for (std::int64_t ch = 0; ch < c; ++ch)
      for (std::int64_t k = 0; k < area; ++k) {
        double sq = 0.0;
        for (std::int64_t cc = std::max<std::int64_t>(0, ch - lo); cc <= std::min(c - 1, ch + hi); ++cc) {
          const double v = x.f[(bt * c + cc) * area + k];
          sq += v * v;
        }
        const double v = x.f[(bt * c + ch) * area + k];
        y.f[(bt * c + ch) * area + k] = static_cast<float>(v / std::pow(bias + alpha / size * sq, beta));
      }
  return y;
}

Tensor concat(const Node& node, const std::vector<const Tensor*>& in) {
  if (in.empty()) fail(node, "needs inputs");
  const Tensor& first = f32_input(node, in, 0);
  const std::int64_t axis = normalize_axis(node, node.int_attr("axis", 1), first.shape.size());
  Shape shape = first.shape;
  shape[axis] = 0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const Tensor& t = f32_input(node, in, k);
    if (t.shape.size() != first.shape.size()) fail(node, "rank mismatch");
    for (std::size_t d = 0; d < t.shape.size(); ++d)
      if (static_cast<std::int64_t>(d) != axis && t.shape[d] != first.shape[d]) fail(node, "shape mismatch");
    shape[axis] += t.shape[axis];
  }
  Tensor y = make_f32(shape);
  const std::int64_t outer = product(shape, 0, axis);
  std::int64_t offset = 0;
  const std::int64_t row = product(shape, axis);
  for (const Tensor* t : in) {
    const std::int64_t chunk = product(t->shape, axis);
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(t->f.data() + o * chunk, chunk, y.f.data() + o * row + offset);
    offset += chunk;
  }
  return y;
}

Tensor constant(const Node& node) {
  const auto it = node.attrs.find("value");
  if (it != node.attrs.end() && it->second.kind == Attribute::Kind::tensor) return it->second.t;
  Tensor t;
  if (auto f = node.attrs.find("value_float"); f != node.attrs.end()) {
    t.dtype = DType::f32;
    t.f = {f->second.f};
  } else if (auto fs = node.attrs.find("value_floats"); fs != node.attrs.end()) {
    t.dtype = DType::f32;
    t.f = fs->second.floats;
    t.shape = {static_cast<std::int64_t>(t.f.size())};
  } else if (auto i = node.attrs.find("value_int"); i != node.attrs.end()) {
    t.dtype = DType::i64;
    t.i = {i->second.i};
  } else if (auto is = node.attrs.find("value_ints"); is != node.attrs.end()) {
    t.dtype = DType::i64;
    t.i = is->second.ints;
    t.shape = {static_cast<std::int64_t>(t.i.size())};
  } else {
    fail(node, "no supported value attribute");
  }
  return t;
}

Tensor clip(const Node& node, const std::vector<const Tensor*>& in) {
  float lo = node.float_attr("min", -std::numeric_limits<float>::infinity());
  float hi = node.float_attr("max", std::numeric_limits<float>::infinity());
  if (in.size() > 1 && in[1]) lo = f32_input(node, in, 1).f.at(0);
  if (in.size() > 2 && in[2]) hi = f32_input(node, in, 2).f.at(0);
  return unary(node, in, [lo, hi](float v) { return std::min(std::max(v, lo), hi); });
}

std::vector<Tensor> evaluate(const Node& node, const std::vector<const Tensor*>& in, std::int64_t opset) {
  const std::string& op = node.op_type;
  if (op == "Conv") return {conv(node, in)};
  if (op == "Relu") return {unary(node, in, [](float v) { return v > 0.0f ? v : 0.0f; })};
  if (op == "LeakyRelu") {
    const float alpha = node.float_attr("alpha", 0.01f);
    return {unary(node, in, [alpha](float v) { return v >= 0.0f ? v : alpha * v; })};
  }
  if (op == "Sigmoid")
    return {unary(node, in, [](float v) { return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v)))); })};
  if (op == "Tanh") return {unary(node, in, [](float v) { return std::tanh(v); })};
  if (op == "Clip") return {clip(node, in)};
  if (op == "MaxPool") return {pool(node, in, true)};
  if (op == "AveragePool") return {pool(node, in, false)};
  if (op == "GlobalAveragePool") return {global_pool(node, in, false)};
  if (op == "GlobalMaxPool") return {global_pool(node, in, true)};
  if (op == "Gemm") return {gemm(node, in)};
  if (op == "MatMul") return {matmul(node, in)};
  if (op == "Add") return {binary(node, in, [](float a, float b) { return a + b; })};
  if (op == "Sub") return {binary(node, in, [](float a, float b) { return a - b; })};
  if (op == "Mul") return {binary(node, in, [](float a, float b) { return a * b; })};
  if (op == "Div") return {binary(node, in, [](float a, float b) { return a / b; })};
  if (op == "Flatten") return {flatten(node, in)};
  if (op == "Reshape") return {reshape(node, in)};
  if (op == "Identity") {
    if (in.empty() || !in[0]) fail(node, "missing input");
    return {*in[0]};
  }
  if (op == "Dropout") {
    // inference: identity, mask of ones
    Tensor y = f32_input(node, in, 0);
    Tensor mask = y;
    std::fill(mask.f.begin(), mask.f.end(), 1.0f);
    return {std::move(y), std::move(mask)};
  }
  if (op == "BatchNormalization") return {batch_norm(node, in)};
  if (op == "Softmax") return {softmax(node, in, opset)};
  if (op == "LRN") return {lrn(node, in)};
  if (op == "Concat") return {concat(node, in)};
  if (op == "Constant") return {constant(node)};
  throw UnsupportedOperator(op);
}

}  // namespace

std::int64_t Tensor::numel() const { return product(shape); }

std::int64_t Node::int_attr(const std::string& key, std::int64_t fallback) const {
  const auto it = attrs.find(key);
  return it != attrs.end() && it->second.kind == Attribute::Kind::i ? it->second.i : fallback;
}

float Node::float_attr(const std::string& key, float fallback) const {
  const auto it = attrs.find(key);
  return it != attrs.end() && it->second.kind == Attribute::Kind::f ? it->second.f : fallback;
}

std::string Node::string_attr(const std::string& key, const std::string& fallback) const {
  const auto it = attrs.find(key);
  return it != attrs.end() && it->second.kind == Attribute::Kind::s ? it->second.s : fallback;
}

std::vector<std::int64_t> Node::ints_attr(const std::string& key, std::vector<std::int64_t> fallback) const {
  const auto it = attrs.find(key);
  return it != attrs.end() && it->second.kind == Attribute::Kind::ints ? it->second.ints : fallback;
}

bool is_supported_op(const std::string& op_type) { return supported_ops().count(op_type) > 0; }

Graph Graph::parse(const std::string& bytes, const std::string& fallback_name) {
  onnx::ModelProto model;
  if (bytes.empty() || !model.ParseFromString(bytes)) throw ModelLoadError("not a valid ONNX model");
  if (!model.has_graph()) throw ModelLoadError("model has no graph");
  const onnx::GraphProto& gp = model.graph();

  Graph g;
  g.name_ = gp.name().empty() ? fallback_name : gp.name();
  for (const auto& os : model.opset_import())
    if (os.domain().empty() || os.domain() == "ai.onnx") g.opset_ = os.version();

  for (const auto& init : gp.initializer()) g.initializers_[init.name()] = from_proto(init);

  for (const auto& vi : gp.input()) {
    if (g.initializers_.count(vi.name())) continue;
    if (!g.input_name_.empty()) throw ModelLoadError("models with more than one data input are not supported");
    g.input_name_ = vi.name();
    if (!vi.type().has_tensor_type() || !vi.type().tensor_type().has_shape())
      throw ModelLoadError("data input '" + vi.name() + "' has no tensor shape");
    for (const auto& d : vi.type().tensor_type().shape().dim())
      g.input_shape_.push_back(d.has_dim_value() ? d.dim_value() : -1);
  }
  if (g.input_name_.empty()) throw ModelLoadError("model has no data input");
  if (g.input_shape_.size() != 4) throw ModelLoadError("data input must be NCHW (rank 4)");
  for (std::size_t k = 1; k < 4; ++k)
    if (g.input_shape_[k] <= 0) throw ModelLoadError("data input needs fixed C, H, W dimensions");
  g.input_shape_[0] = 1;

  std::vector<Node> pending;
  for (int k = 0; k < gp.node_size(); ++k) {
    const auto& np = gp.node(k);
    if (!np.domain().empty() && np.domain() != "ai.onnx") throw UnsupportedOperator(np.domain() + "." + np.op_type());
    if (!is_supported_op(np.op_type())) throw UnsupportedOperator(np.op_type());
    Node node;
    node.name = np.name().empty() ? "node" + std::to_string(k) : np.name();
    node.op_type = np.op_type();
    node.inputs.assign(np.input().begin(), np.input().end());
    node.outputs.assign(np.output().begin(), np.output().end());
    for (const auto& ap : np.attribute()) node.attrs[ap.name()] = from_proto(ap);
    pending.push_back(std::move(node));
  }
  if (pending.empty()) throw ModelLoadError("graph has no nodes");

  // Stable topological order: the earliest ready node in file order wins.
  std::set<std::string> available = {g.input_name_};
  for (const auto& [name, t] : g.initializers_) available.insert(name);
  std::vector<bool> placed(pending.size(), false);
  for (std::size_t done = 0; done < pending.size();) {
    bool progressed = false;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      if (placed[k]) continue;
      const Node& node = pending[k];
      const bool ready = std::all_of(node.inputs.begin(), node.inputs.end(),
                                     [&](const std::string& in) { return in.empty() || available.count(in); });
      if (!ready) continue;
      for (const auto& out : node.outputs) {
        if (out.empty()) continue;
        if (!available.insert(out).second) throw ModelLoadError("tensor '" + out + "' is produced twice");
        g.tensor_names_.push_back(out);
      }
      g.nodes_.push_back(node);
      placed[k] = true;
      ++done;
      progressed = true;
      break;
    }
    if (!progressed) throw ModelLoadError("graph has a cycle or references an undefined tensor");
  }
  return g;
}

std::map<std::string, Tensor> Graph::run(const Tensor& input, const std::set<std::string>& capture) const {
  if (input.shape != input_shape_) throw InvalidInput("input tensor shape does not match the network input");
  std::map<std::string, const Tensor*> env;
  std::map<std::string, Tensor> produced;
  for (const auto& [name, t] : initializers_) env[name] = &t;
  env[input_name_] = &input;

  std::map<std::string, Tensor> out;
  std::size_t remaining = capture.size();
  for (const Node& node : nodes_) {
    if (remaining == 0) break;
    std::vector<const Tensor*> in;
    in.reserve(node.inputs.size());
    for (const auto& name : node.inputs) {
      if (name.empty()) {
        in.push_back(nullptr);
        continue;
      }
      in.push_back(env.at(name));
    }
    std::vector<Tensor> results = evaluate(node, in, opset_);
    for (std::size_t k = 0; k < node.outputs.size() && k < results.size(); ++k) {
      const std::string& name = node.outputs[k];
      if (name.empty()) continue;
      auto [it, inserted] = produced.emplace(name, std::move(results[k]));
      env[name] = &it->second;
      if (capture.count(name)) {
        out[name] = it->second;
        --remaining;
      }
    }
  }
  return out;
}

}  // namespace periocular::onnx_engine
