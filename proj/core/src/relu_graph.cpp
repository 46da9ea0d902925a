#include "zonoplan/relu_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace zonoplan {
namespace {

// ---------------------------------------------------------------------------
// Error-free scalar evaluation of the fixed-weight pair gadgets.
//
// The pre-activations x+y and x-y are kept as exact two-term sums so the
// final combination 0.5*((x+y) -/+ |x-y|) reproduces min/max without any
// rounding: the true total 2*min(x,y) (resp. 2*max) is itself representable.
// ---------------------------------------------------------------------------

inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bv = s - a;
  e = (a - (s - bv)) + (b - bv);
}

struct TwoFold {
  double hi = 0.0;
  double lo = 0.0;
};

inline TwoFold exact_sum(double a, double b) {
  TwoFold r;
  two_sum(a, b, r.hi, r.lo);
  return r;
}

inline TwoFold negate(TwoFold v) { return {-v.hi, -v.lo}; }

inline bool positive(const TwoFold& v) { return v.hi > 0.0 || (v.hi == 0.0 && v.lo > 0.0); }

inline TwoFold relu(const TwoFold& v) { return positive(v) ? v : TwoFold{0.0, 0.0}; }

// Exact sum of four doubles whose true total is representable: distillation
// by repeated TwoSum sweeps leaves the total in v[0].
inline double distill4(double a, double b, double c, double d) {
  double v[4] = {a, b, c, d};
  for (int pass = 0; pass < 3; ++pass) {
    for (int i = 3; i > 0; --i) {
      double s, e;
      two_sum(v[i - 1], v[i], s, e);
      v[i - 1] = s;
      v[i] = e;
    }
  }
  return ((v[3] + v[2]) + v[1]) + v[0];
}

double pair_gadget(double x, double y, bool want_min) {
  const TwoFold s = exact_sum(x, y);
  const TwoFold d = exact_sum(x, -y);

  // Exactly one of each opposing ReLU pair is active, so the weighted sum
  // collapses to 0.5*(s -/+ |d|) with both terms exact.
  const TwoFold rs = relu(s);
  const TwoFold rns = relu(negate(s));
  const TwoFold rd = relu(d);
  const TwoFold rnd = relu(negate(d));

  const double sign = want_min ? -1.0 : 1.0;
  const double total = distill4(rs.hi - rns.hi, rs.lo - rns.lo, sign * (rd.hi + rnd.hi),
                                sign * (rd.lo + rnd.lo));
  return 0.5 * total;
}

// ---------------------------------------------------------------------------
// Layered graph construction
// ---------------------------------------------------------------------------

// During tree construction a value is either a live slot in the current
// activation vector or an elided sentinel constant.
struct Slot {
  std::uint32_t index = 0;
  bool sentinel = false;
};

class Builder {
 public:
  explicit Builder(std::size_t input_dim) : cur_dim_(input_dim) {}

  std::size_t cur_dim() const { return cur_dim_; }

  AffineLayer* begin_affine() {
    layers_.push_back(Layer{Layer::Kind::Affine, {}, {}, {}, {}});
    return &layers_.back().affine;
  }
  void end_affine() { cur_dim_ = layers_.back().affine.out_dim(); }

  void add_relu(std::size_t active, std::vector<std::uint8_t> slopes) {
    Layer layer{Layer::Kind::Relu, {}, {}, {}, {}};
    layer.relu.active = active;
    layer.relu.kink_slope = std::move(slopes);
    layers_.push_back(std::move(layer));
    if (active > 0) {
      ++relu_layers_;
      max_relu_width_ = std::max(max_relu_width_, active);
    }
  }

  void add_norm(std::size_t out_dim) {
    Layer layer{Layer::Kind::Norm, {}, {}, {}, {}};
    layer.norm.out_dim = out_dim;
    layers_.push_back(std::move(layer));
    cur_dim_ = out_dim;
  }

  void add_sign(std::size_t dim) {
    Layer layer{Layer::Kind::Sign, {}, {}, {}, {}};
    layer.sign.dim = dim;
    layers_.push_back(std::move(layer));
  }

  // Reduces each group of slots to a single slot with synchronized levels of
  // pair gadgets. Sentinel-padded pairs pass the live value through.
  void min_tree(std::vector<std::vector<Slot>>& groups) {
    auto finished = [&] {
      for (const auto& g : groups) {
        if (g.size() > 1) return false;
      }
      return true;
    };

    while (!finished()) {
      // pre-activation layer: 4 rows per live pair, identity rows for carries
      AffineLayer* pre = begin_affine();
      struct PendingGadget {
        std::uint32_t unit0;  // first of 4 ReLU units
      };
      std::vector<std::vector<int>> next_kind(groups.size());  // 0 gadget, 1 carry, 2 sentinel
      std::vector<std::vector<std::uint32_t>> next_ref(groups.size());
      std::vector<std::uint8_t> slopes;
      std::uint32_t relu_units = 0;
      std::vector<std::uint32_t> carry_rows;  // filled after relu units

      // first pass: gadget pre-activations
      for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        auto& slots = groups[gi];
        if (slots.size() == 1) {
          next_kind[gi].push_back(1);
          next_ref[gi].push_back(slots[0].sentinel ? 0 : slots[0].index);
          if (slots[0].sentinel) next_kind[gi].back() = 2;
          continue;
        }
        for (std::size_t t = 0; t + 1 < slots.size(); t += 2) {
          const Slot a = slots[t];
          const Slot b = slots[t + 1];
          if (a.sentinel && b.sentinel) {
            next_kind[gi].push_back(2);
            next_ref[gi].push_back(0);
          } else if (a.sentinel || b.sentinel) {
            const Slot live = a.sentinel ? b : a;
            next_kind[gi].push_back(1);
            next_ref[gi].push_back(live.index);
          } else {
            // rows: a+b, a-b, -a+b, -a-b
            pre->rows.push_back({{a.index, 1.0}, {b.index, 1.0}});
            pre->rows.push_back({{a.index, 1.0}, {b.index, -1.0}});
            pre->rows.push_back({{a.index, -1.0}, {b.index, 1.0}});
            pre->rows.push_back({{a.index, -1.0}, {b.index, -1.0}});
            pre->bias.insert(pre->bias.end(), {0.0, 0.0, 0.0, 0.0});
            // tie derivative picks the first argument of min
            slopes.insert(slopes.end(), {1, 0, 1, 0});
            next_kind[gi].push_back(0);
            next_ref[gi].push_back(relu_units);
            relu_units += 4;
          }
        }
      }
      // second pass: carry rows after the gadget units
      std::uint32_t carry_at = relu_units;
      for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        for (std::size_t t = 0; t < next_kind[gi].size(); ++t) {
          if (next_kind[gi][t] == 1) {
            pre->rows.push_back({{next_ref[gi][t], 1.0}});
            pre->bias.push_back(0.0);
            next_ref[gi][t] = carry_at++;
          }
        }
      }
      end_affine();
      add_relu(relu_units, std::move(slopes));

      // combine layer: 0.5*(u0 - u1 - u2 - u3) per gadget, carries forward
      AffineLayer* combine = begin_affine();
      for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        std::vector<Slot> next_slots;
        for (std::size_t t = 0; t < next_kind[gi].size(); ++t) {
          if (next_kind[gi][t] == 2) {
            next_slots.push_back({0, true});
            continue;
          }
          if (next_kind[gi][t] == 1) {
            combine->rows.push_back({{next_ref[gi][t], 1.0}});
            combine->bias.push_back(0.0);
          } else {
            const std::uint32_t u = next_ref[gi][t];
            combine->rows.push_back(
                {{u, 0.5}, {u + 1, -0.5}, {u + 2, -0.5}, {u + 3, -0.5}});
            combine->bias.push_back(0.0);
          }
          next_slots.push_back({static_cast<std::uint32_t>(combine->rows.size() - 1), false});
        }
        groups[gi] = std::move(next_slots);
      }
      end_affine();
    }
  }

  std::vector<Layer> take_layers() { return std::move(layers_); }
  std::size_t relu_layers() const { return relu_layers_; }
  std::size_t max_relu_width() const { return max_relu_width_; }

 private:
  std::vector<Layer> layers_;
  std::size_t cur_dim_ = 0;
  std::size_t relu_layers_ = 0;
  std::size_t max_relu_width_ = 0;
};

std::size_t pow2_at_least(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

double relu_min_pair(double x, double y) { return pair_gadget(x, y, true); }
double relu_max_pair(double x, double y) { return pair_gadget(x, y, false); }

double relu_min_tree(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("relu_min_tree: empty input");
  std::vector<double> level = values;
  level.resize(pow2_at_least(level.size()), kMinTreeSentinel);
  std::vector<bool> sentinel(level.size(), false);
  for (std::size_t i = values.size(); i < level.size(); ++i) sentinel[i] = true;

  while (level.size() > 1) {
    std::vector<double> next;
    std::vector<bool> next_sent;
    for (std::size_t t = 0; t + 1 < level.size(); t += 2) {
      if (sentinel[t] && sentinel[t + 1]) {
        next.push_back(kMinTreeSentinel);
        next_sent.push_back(true);
      } else if (sentinel[t] || sentinel[t + 1]) {
        next.push_back(sentinel[t] ? level[t + 1] : level[t]);
        next_sent.push_back(false);
      } else {
        next.push_back(relu_min_pair(level[t], level[t + 1]));
        next_sent.push_back(false);
      }
    }
    level = std::move(next);
    sentinel = std::move(next_sent);
  }
  return level[0];
}

// ---------------------------------------------------------------------------
// SdfGraph
// ---------------------------------------------------------------------------

std::size_t SdfGraph::width_bound() const {
  const std::size_t n = segment_count_;
  const std::size_t half = (n + 1) / 2;
  return tree_only_ ? 4 * half : 4 * half + 8;
}

std::size_t SdfGraph::depth_bound() const {
  const std::size_t n = segment_count_;
  std::size_t log2_floor = 0;
  for (std::size_t v = n; v > 1; v >>= 1) ++log2_floor;
  return tree_only_ ? 2 * log2_floor : 2 * log2_floor + 4;
}

std::vector<std::vector<double>> SdfGraph::run_forward(const std::vector<double>& input,
                                                       std::vector<double>* signs) const {
  std::vector<std::vector<double>> acts;
  acts.reserve(layers_.size() + 1);
  acts.push_back(input);

  for (const Layer& layer : layers_) {
    const std::vector<double>& in = acts.back();
    std::vector<double> out;
    switch (layer.kind) {
      case Layer::Kind::Affine: {
        out.resize(layer.affine.out_dim());
        for (std::size_t r = 0; r < out.size(); ++r) {
          double v = layer.affine.bias[r];
          for (const AffineLayer::Term& t : layer.affine.rows[r]) v += t.w * in[t.col];
          out[r] = v;
        }
        break;
      }
      case Layer::Kind::Relu: {
        out = in;
        for (std::size_t i = 0; i < layer.relu.active; ++i) {
          if (out[i] < 0.0) out[i] = 0.0;
        }
        break;
      }
      case Layer::Kind::Norm: {
        out.resize(layer.norm.out_dim);
        for (std::size_t i = 0; i < out.size(); ++i) {
          out[i] = std::hypot(in[2 * i], in[2 * i + 1]);
        }
        break;
      }
      case Layer::Kind::Sign: {
        out = in;
        if (signs != nullptr) {
          for (std::size_t i = 0; i < layer.sign.dim; ++i) out[i] *= (*signs)[i];
        }
        break;
      }
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

namespace {

std::vector<double> containment_signs(const std::vector<VertexPolygon>& polys, const Vec2& c_z) {
  std::vector<double> signs(polys.size(), 1.0);
  for (std::size_t i = 0; i < polys.size(); ++i) {
    if (polys[i].size() > 2 && contains_point(polys[i], c_z)) signs[i] = -1.0;
  }
  return signs;
}

}  // namespace

double SdfGraph::forward(const Vec2& c_z) const {
  std::vector<double> signs = containment_signs(obstacle_polys_, c_z);
  const auto acts = run_forward({c_z.x, c_z.y}, &signs);
  return acts.back()[0];
}

double SdfGraph::forward_vector(const std::vector<double>& input) const {
  const auto acts = run_forward(input, nullptr);
  return acts.back()[0];
}

SdfGraph::Backward SdfGraph::forward_backward(const Vec2& c_z) const {
  std::vector<double> signs = containment_signs(obstacle_polys_, c_z);
  const auto acts = run_forward({c_z.x, c_z.y}, &signs);

  std::vector<double> adj(acts.back().size(), 0.0);
  adj[0] = 1.0;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& layer = layers_[li];
    const std::vector<double>& in = acts[li];
    std::vector<double> prev(in.size(), 0.0);
    switch (layer.kind) {
      case Layer::Kind::Affine: {
        for (std::size_t r = 0; r < layer.affine.out_dim(); ++r) {
          const double a = adj[r];
          if (a == 0.0) continue;
          for (const AffineLayer::Term& t : layer.affine.rows[r]) prev[t.col] += a * t.w;
        }
        break;
      }
      case Layer::Kind::Relu: {
        prev = adj;
        for (std::size_t i = 0; i < layer.relu.active; ++i) {
          if (in[i] > 0.0) continue;
          prev[i] = (in[i] == 0.0) ? prev[i] * layer.relu.kink_slope[i] : 0.0;
        }
        break;
      }
      case Layer::Kind::Norm: {
        for (std::size_t i = 0; i < layer.norm.out_dim; ++i) {
          const double n = acts[li + 1][i];
          if (n < 1e-12) continue;  // zero gradient at the cone point
          prev[2 * i] = adj[i] * in[2 * i] / n;
          prev[2 * i + 1] = adj[i] * in[2 * i + 1] / n;
        }
        break;
      }
      case Layer::Kind::Sign: {
        prev = adj;
        for (std::size_t i = 0; i < layer.sign.dim; ++i) prev[i] *= signs[i];
        break;
      }
    }
    adj = std::move(prev);
  }
  return {acts.back()[0], Vec2{adj[0], adj[1]}};
}

std::string SdfGraph::structure_json() const {
  nlohmann::json j;
  j["input_dim"] = input_dim_;
  j["segments"] = segment_count_;
  j["width"] = width_;
  j["depth"] = depth_;
  j["width_bound"] = width_bound();
  j["depth_bound"] = depth_bound();
  auto& arr = j["layers"] = nlohmann::json::array();
  for (const Layer& layer : layers_) {
    nlohmann::json l;
    switch (layer.kind) {
      case Layer::Kind::Affine:
        l["kind"] = "affine";
        l["out"] = layer.affine.out_dim();
        break;
      case Layer::Kind::Relu:
        l["kind"] = "relu";
        l["units"] = layer.relu.active;
        break;
      case Layer::Kind::Norm:
        l["kind"] = "norm";
        l["out"] = layer.norm.out_dim;
        break;
      case Layer::Kind::Sign:
        l["kind"] = "sign";
        l["dim"] = layer.sign.dim;
        break;
    }
    arr.push_back(std::move(l));
  }
  return j.dump();
}

SdfGraph build_sdf_graph(const Zonotope& z, const std::vector<Zonotope>& obstacles) {
  if (obstacles.empty()) {
    throw std::invalid_argument("build_sdf_graph: no obstacles");
  }

  struct SegmentRef {
    Vec2 a;
    Vec2 u;   // b - a
    double uu = 0.0;
  };
  std::vector<SegmentRef> segs;
  std::vector<std::size_t> group_sizes;
  std::vector<VertexPolygon> polys;

  for (const Zonotope& o : obstacles) {
    const Zonotope buffered = buffered_obstacle(z, o);
    if (buffered.is_point()) {
      throw std::invalid_argument("build_sdf_graph: buffered obstacle degenerates to a point");
    }
    VertexPolygon poly = enumerate_vertices(buffered);
    const std::size_t n = poly.size();
    for (std::size_t l = 0; l < n; ++l) {
      const Vec2 a = poly[l];
      const Vec2 b = poly[(l + 1) % n];
      const Vec2 u = b - a;
      segs.push_back({a, u, u.squared_norm()});
    }
    group_sizes.push_back(n);
    polys.push_back(std::move(poly));
  }

  const std::size_t n_total = segs.size();
  Builder b(2);

  // projection parameter t-hat per segment, query point carried alongside
  {
    AffineLayer* l0 = b.begin_affine();
    for (const SegmentRef& s : segs) {
      l0->rows.push_back({{0, s.u.x / s.uu}, {1, s.u.y / s.uu}});
      l0->bias.push_back(-dot(s.a, s.u) / s.uu);
    }
    l0->rows.push_back({{0, 1.0}});
    l0->bias.push_back(0.0);
    l0->rows.push_back({{1, 1.0}});
    l0->bias.push_back(0.0);
    b.end_affine();
  }
  // clamp below: max(t-hat, 0) = ReLU(t-hat)
  b.add_relu(n_total, std::vector<std::uint8_t>(n_total, 1));
  // clamp above: t* = 1 - ReLU(1 - m)
  {
    AffineLayer* l = b.begin_affine();
    for (std::size_t i = 0; i < n_total; ++i) {
      l->rows.push_back({{static_cast<std::uint32_t>(i), -1.0}});
      l->bias.push_back(1.0);
    }
    l->rows.push_back({{static_cast<std::uint32_t>(n_total), 1.0}});
    l->bias.push_back(0.0);
    l->rows.push_back({{static_cast<std::uint32_t>(n_total + 1), 1.0}});
    l->bias.push_back(0.0);
    b.end_affine();
  }
  b.add_relu(n_total, std::vector<std::uint8_t>(n_total, 1));
  // difference vectors e_i = c_z - (a + u * t*) with t* = 1 - R
  {
    AffineLayer* l = b.begin_affine();
    const auto cx = static_cast<std::uint32_t>(n_total);
    const auto cy = static_cast<std::uint32_t>(n_total + 1);
    for (std::size_t i = 0; i < n_total; ++i) {
      const SegmentRef& s = segs[i];
      const auto r = static_cast<std::uint32_t>(i);
      l->rows.push_back({{cx, 1.0}, {r, s.u.x}});
      l->bias.push_back(-s.a.x - s.u.x);
      l->rows.push_back({{cy, 1.0}, {r, s.u.y}});
      l->bias.push_back(-s.a.y - s.u.y);
    }
    b.end_affine();
  }
  b.add_norm(n_total);

  // per-obstacle balanced min trees over the segment distances
  std::vector<std::vector<Slot>> groups;
  {
    std::uint32_t at = 0;
    for (std::size_t n : group_sizes) {
      std::vector<Slot> slots;
      for (std::size_t i = 0; i < n; ++i) slots.push_back({at++, false});
      const std::size_t padded = pow2_at_least(n);
      for (std::size_t i = n; i < padded; ++i) slots.push_back({0, true});
      groups.push_back(std::move(slots));
    }
  }
  b.min_tree(groups);

  // Each group is now one slot; gather them in obstacle order, flip signs by
  // the runtime containment bits, then reduce across obstacles.
  {
    AffineLayer* gather = b.begin_affine();
    for (const auto& g : groups) {
      gather->rows.push_back({{g[0].index, 1.0}});
      gather->bias.push_back(0.0);
    }
    b.end_affine();
  }
  b.add_sign(groups.size());
  if (groups.size() > 1) {
    std::vector<std::vector<Slot>> outer(1);
    for (std::uint32_t i = 0; i < groups.size(); ++i) outer[0].push_back({i, false});
    const std::size_t padded = pow2_at_least(outer[0].size());
    for (std::size_t i = outer[0].size(); i < padded; ++i) outer[0].push_back({0, true});
    b.min_tree(outer);
  }

  SdfGraph g;
  g.width_ = b.max_relu_width();
  g.depth_ = b.relu_layers();
  g.layers_ = b.take_layers();
  g.obstacle_polys_ = std::move(polys);
  g.input_dim_ = 2;
  g.segment_count_ = n_total;
  if (!g.within_bounds()) {
    throw std::logic_error("build_sdf_graph: constructed graph exceeds structural bounds");
  }
  return g;
}

SdfGraph build_min_tree_graph(std::size_t n) {
  if (n == 0) throw std::invalid_argument("build_min_tree_graph: empty input");
  Builder b(n);
  std::vector<std::vector<Slot>> groups(1);
  for (std::uint32_t i = 0; i < n; ++i) groups[0].push_back({i, false});
  const std::size_t padded = pow2_at_least(n);
  for (std::size_t i = n; i < padded; ++i) groups[0].push_back({0, true});
  if (n == 1) {
    AffineLayer* l = b.begin_affine();
    l->rows.push_back({{0, 1.0}});
    l->bias.push_back(0.0);
    b.end_affine();
  } else {
    b.min_tree(groups);
  }

  SdfGraph g;
  g.width_ = b.max_relu_width();
  g.depth_ = b.relu_layers();
  g.layers_ = b.take_layers();
  g.input_dim_ = n;
  g.segment_count_ = n;
  g.tree_only_ = true;
  return g;
}

double eval_min_tree(const SdfGraph& g, const std::vector<double>& values) {
  return g.forward_vector(values);
}

ParamGradient forward_backward_param(const SdfGraph& g, const ParamCoupling& coupling,
                                     const Vec2& p) {
  const SdfGraph::Backward bw = g.forward_backward(coupling.center_at(p));
  return {bw.value, coupling.a.transpose() * bw.grad_cz};
}

std::vector<double> batch_forward(const std::vector<const SdfGraph*>& graphs,
                                  const std::vector<Vec2>& inputs) {
  if (graphs.size() != inputs.size()) {
    throw std::invalid_argument("batch_forward: size mismatch");
  }
  std::vector<double> out(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) out[i] = graphs[i]->forward(inputs[i]);
  return out;
}

}  // namespace zonoplan
