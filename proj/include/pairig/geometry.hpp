#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "pairig/random.hpp"

namespace pairig {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct WholeSpace {
  std::size_t dim;
};

struct NonnegativeOrthant {
  std::size_t dim;
};

struct Box {
  Vector lower;
  Vector upper;
};

struct Ball {
  Vector center;
  double radius;
};

/// Halfspace a^T x <= c.
struct Halfspace {
  Vector normal;
  double offset;
};

struct Polyhedron {
  std::vector<Halfspace> halfspaces;
  std::optional<Box> bounds;
  /// A point satisfying every halfspace and the bounds. Without it the set is
  /// not certified nonempty and projection refuses to run.
  std::optional<Vector> witness;
};

/// Projectable closed convex set.
class SetSpec {
 public:
  using Variant = std::variant<WholeSpace, NonnegativeOrthant, Box, Ball, Polyhedron>;

  static SetSpec whole_space(std::size_t dim);
  static SetSpec nonnegative_orthant(std::size_t dim);
  static SetSpec box(Vector lower, Vector upper);
  static SetSpec uniform_box(std::size_t dim, double lower, double upper);
  static SetSpec ball(Vector center, double radius);
  static SetSpec polyhedron(std::vector<Halfspace> halfspaces, std::optional<Box> bounds,
                            std::optional<Vector> witness);

  std::size_t dim() const;
  bool is_bounded() const;
  const Variant& variant() const { return variant_; }

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&variant_);
  }

 private:
  explicit SetSpec(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

struct DykstraOptions {
  std::size_t max_sweeps = 10000;
  double tol = 1e-10;
};

struct PolyhedronProjection {
  Vector point;
  std::size_t sweeps = 0;
  bool converged = false;
  /// Largest halfspace violation max_j (a_j^T x - c_j)_+ at the returned point.
  double max_violation = 0.0;
};

/// Euclidean projection onto the set. Closed form for every variant except
/// Polyhedron, which uses Dykstra's algorithm with default options.
Vector project(const SetSpec& set, const Vector& z);

/// Dykstra's alternating projection over the halfspace family (plus the
/// optional bounds box as one extra closed-form block). Converges to the
/// Euclidean projection, unlike plain cyclic projection.
PolyhedronProjection project_polyhedron(const Polyhedron& poly, const Vector& z,
                                        const DykstraOptions& options = {});

struct DiameterBound {
  double value;
  /// True when the value is an upper estimate rather than the exact sup norm.
  bool estimate;
};

/// M_X = sup_{x in X} ||x||. Exact for Box and Ball; for a Polyhedron the
/// norm of the farthest corner of its bounds box (flagged as an estimate).
DiameterBound diameter_bound(const SetSpec& set);

bool contains(const SetSpec& set, const Vector& x, double tol = 1e-9);

/// Uniform sample from the set. Unbounded sets need `sampling_box`; the sample
/// is then drawn from the box and projected onto the set.
Vector sample_point(const SetSpec& set, Rng& rng, const std::optional<Box>& sampling_box = {});

/// All 2^n corners of a box (n <= 20).
std::vector<Vector> box_vertices(const Box& box);

}  // namespace pairig
