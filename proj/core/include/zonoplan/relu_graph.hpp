#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "zonoplan/signed_distance.hpp"
#include "zonoplan/zonotope.hpp"

namespace zonoplan {

/// min/max of a pair evaluated through the fixed-weight 4-unit ReLU form.
/// The four pre-activations are formed with error-free transforms so the
/// result is bit-identical to std::min / std::max for finite inputs whose
/// sum does not overflow.
double relu_min_pair(double x, double y);
double relu_max_pair(double x, double y);

/// Sentinel used to pad min-trees to a power of two; must dominate every
/// real input, so graph inputs are assumed well below this magnitude.
inline constexpr double kMinTreeSentinel = 1e30;

/// Sparse affine layer: out[r] = bias[r] + sum_k w * in[col].
struct AffineLayer {
  struct Term {
    std::uint32_t col;
    double w;
  };
  std::vector<std::vector<Term>> rows;
  std::vector<double> bias;

  std::size_t out_dim() const { return rows.size(); }
};

/// ReLU over the first `active` entries, identity passthrough on the rest
/// (carried values). kink_slope gives the derivative used at exactly 0 so
/// that min/max gadget ties resolve to their first argument.
struct ReluLayer {
  std::size_t active = 0;
  std::vector<std::uint8_t> kink_slope;  // size == active, values 0 or 1
};

/// Euclidean norm of consecutive input pairs: out[i] = |(in[2i], in[2i+1])|.
/// Native smooth primitive; gradient is x/|x| with a zero guard below 1e-12.
struct NormLayer {
  std::size_t out_dim = 0;
};

/// Runtime sign flip per entry, driven by the containment test of the
/// current query point against each buffered obstacle polygon.
struct SignLayer {
  std::size_t dim = 0;
};

struct Layer {
  enum class Kind { Affine, Relu, Norm, Sign } kind;
  AffineLayer affine;
  ReluLayer relu;
  NormLayer norm;
  SignLayer sign;
};

/// Layered exact computation graph for the signed distance from a zonotope
/// (query center as the differentiable input) to a union of buffered
/// obstacle zonotopes. Structure is fixed at build time; only the 2-vector
/// input varies between evaluations.
class SdfGraph {
 public:
  const std::vector<Layer>& layers() const { return layers_; }

  /// Max ReLU units over all ReLU layers.
  std::size_t width() const { return width_; }
  /// Number of ReLU layers.
  std::size_t depth() const { return depth_; }
  /// Total boundary segments across all buffered obstacles.
  std::size_t segment_count() const { return segment_count_; }

  /// Theorem-form structural bounds this graph must satisfy.
  std::size_t width_bound() const;
  std::size_t depth_bound() const;
  bool within_bounds() const { return width() <= width_bound() && depth() <= depth_bound(); }

  double forward(const Vec2& c_z) const;
  /// Raw evaluation on an explicit input vector (min-tree graphs take their
  /// scalars directly; sdf graphs take {c_z.x, c_z.y}).
  double forward_vector(const std::vector<double>& input) const;

  struct Backward {
    double value = 0.0;
    Vec2 grad_cz;
  };
  Backward forward_backward(const Vec2& c_z) const;

  /// Node/shape dump for the structural audit.
  std::string structure_json() const;

  friend SdfGraph build_sdf_graph(const Zonotope& z, const std::vector<Zonotope>& obstacles);
  friend SdfGraph build_min_tree_graph(std::size_t n);

 private:
  std::vector<Layer> layers_;
  std::vector<VertexPolygon> obstacle_polys_;  // for the runtime sign bits
  std::size_t input_dim_ = 2;
  std::size_t width_ = 0;
  std::size_t depth_ = 0;
  std::size_t segment_count_ = 0;
  bool tree_only_ = false;  // bare min-tree bounds, no clamp/distance stages

  std::vector<std::vector<double>> run_forward(const std::vector<double>& input,
                                               std::vector<double>* signs) const;
};

/// Builds the exact signed-distance graph for z against the obstacle list.
/// Preconditions match signed_distance_zonotopes; every buffered obstacle
/// must have at least one generator.
SdfGraph build_sdf_graph(const Zonotope& z, const std::vector<Zonotope>& obstacles);

/// Balanced min-tree over n scalar inputs built from pair gadgets, padded to
/// a power of two with sentinel constants. Used directly by tests and as the
/// reduction stage of build_sdf_graph. Throws on n == 0.
SdfGraph build_min_tree_graph(std::size_t n);

/// Evaluates a min-tree graph on explicit scalar inputs.
double eval_min_tree(const SdfGraph& g, const std::vector<double>& values);

/// Exact minimum of a list through the balanced pair-gadget tree.
/// Throws std::invalid_argument on an empty list.
double relu_min_tree(const std::vector<double>& values);

/// Affine coupling from the trajectory parameter to the graph input:
/// c_z = base + A * p (the reachable-set center for one time interval).
struct ParamCoupling {
  Vec2 base;
  Mat2 a;

  Vec2 center_at(const Vec2& p) const { return base + a * p; }
};

struct ParamGradient {
  double value = 0.0;
  Vec2 grad_p;
};

/// Forward/backward through the graph with the chain rule through the
/// coupling matrix, yielding the gradient w.r.t. the trajectory parameter.
ParamGradient forward_backward_param(const SdfGraph& g, const ParamCoupling& coupling,
                                     const Vec2& p);

/// Batched evaluation; identical results to evaluating each graph alone.
std::vector<double> batch_forward(const std::vector<const SdfGraph*>& graphs,
                                  const std::vector<Vec2>& inputs);

}  // namespace zonoplan
