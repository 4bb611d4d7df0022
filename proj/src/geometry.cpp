#include "pairig/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pairig/errors.hpp"

namespace pairig {
namespace {

void require_dim(std::size_t expected, Eigen::Index actual, const char* what) {
  if (static_cast<std::size_t>(actual) != expected) {
    throw ArgumentError(std::string(what) + ": dimension mismatch (expected " +
                        std::to_string(expected) + ", got " + std::to_string(actual) + ")");
  }
}

void check_box(const Box& box) {
  if (box.lower.size() != box.upper.size()) {
    throw ArgumentError("box: lower and upper bounds differ in dimension");
  }
  for (Eigen::Index j = 0; j < box.lower.size(); ++j) {
    if (!(box.lower[j] <= box.upper[j])) {
      throw ArgumentError("box: lower bound exceeds upper bound at coordinate " +
                          std::to_string(j));
    }
  }
}

Vector clamp(const Box& box, const Vector& z) {
  return z.cwiseMax(box.lower).cwiseMin(box.upper);
}

Vector project_halfspace(const Halfspace& h, const Vector& y) {
  const double excess = h.normal.dot(y) - h.offset;
  if (excess <= 0.0) return y;
  return y - (excess / h.normal.squaredNorm()) * h.normal;
}

double halfspace_violation(const Halfspace& h, const Vector& x) {
  return std::max(0.0, (h.normal.dot(x) - h.offset) / h.normal.norm());
}

bool box_contains(const Box& box, const Vector& x, double tol) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] < box.lower[j] - tol || x[j] > box.upper[j] + tol) return false;
  }
  return true;
}

}  // namespace

SetSpec SetSpec::whole_space(std::size_t dim) { return SetSpec(WholeSpace{dim}); }

SetSpec SetSpec::nonnegative_orthant(std::size_t dim) {
  return SetSpec(NonnegativeOrthant{dim});
}

SetSpec SetSpec::box(Vector lower, Vector upper) {
  Box b{std::move(lower), std::move(upper)};
  check_box(b);
  return SetSpec(std::move(b));
}

SetSpec SetSpec::uniform_box(std::size_t dim, double lower, double upper) {
  return box(Vector::Constant(static_cast<Eigen::Index>(dim), lower),
             Vector::Constant(static_cast<Eigen::Index>(dim), upper));
}

SetSpec SetSpec::ball(Vector center, double radius) {
  if (!(radius > 0.0)) throw ArgumentError("ball: radius must be positive");
  return SetSpec(Ball{std::move(center), radius});
}

SetSpec SetSpec::polyhedron(std::vector<Halfspace> halfspaces, std::optional<Box> bounds,
                            std::optional<Vector> witness) {
  if (halfspaces.empty() && !bounds) {
    throw ArgumentError("polyhedron: needs at least one halfspace or a bounds box");
  }
  const Eigen::Index n =
      halfspaces.empty() ? bounds->lower.size() : halfspaces.front().normal.size();
  for (const auto& h : halfspaces) {
    require_dim(static_cast<std::size_t>(n), h.normal.size(), "polyhedron halfspace");
    if (h.normal.squaredNorm() == 0.0) {
      throw ArgumentError("polyhedron: halfspace with zero normal");
    }
  }
  if (bounds) {
    check_box(*bounds);
    require_dim(static_cast<std::size_t>(n), bounds->lower.size(), "polyhedron bounds");
  }
  if (witness) {
    require_dim(static_cast<std::size_t>(n), witness->size(), "polyhedron witness");
    for (const auto& h : halfspaces) {
      if (halfspace_violation(h, *witness) > 1e-9 * (1.0 + std::abs(h.offset))) {
        throw ConfigurationError("polyhedron: witness point violates a halfspace");
      }
    }
    if (bounds && !box_contains(*bounds, *witness, 1e-9)) {
      throw ConfigurationError("polyhedron: witness point lies outside the bounds box");
    }
  }
  return SetSpec(Polyhedron{std::move(halfspaces), std::move(bounds), std::move(witness)});
}

std::size_t SetSpec::dim() const {
  return std::visit(
      [](const auto& s) -> std::size_t {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, WholeSpace> || std::is_same_v<T, NonnegativeOrthant>) {
          return s.dim;
        } else if constexpr (std::is_same_v<T, Box>) {
          return static_cast<std::size_t>(s.lower.size());
        } else if constexpr (std::is_same_v<T, Ball>) {
          return static_cast<std::size_t>(s.center.size());
        } else {
          return s.halfspaces.empty() ? static_cast<std::size_t>(s.bounds->lower.size())
                                      : static_cast<std::size_t>(s.halfspaces.front().normal.size());
        }
      },
      variant_);
}

bool SetSpec::is_bounded() const {
  if (std::holds_alternative<Box>(variant_) || std::holds_alternative<Ball>(variant_)) return true;
  if (const auto* p = std::get_if<Polyhedron>(&variant_)) return p->bounds.has_value();
  return false;
}

PolyhedronProjection project_polyhedron(const Polyhedron& poly, const Vector& z,
                                        const DykstraOptions& options) {
  if (!poly.witness) {
    throw ConfigurationError("polyhedron projection: no feasible witness point supplied");
  }
  const std::size_t blocks = poly.halfspaces.size() + (poly.bounds ? 1 : 0);
  std::vector<Vector> increments(blocks, Vector::Zero(z.size()));

  PolyhedronProjection result;
  Vector x = z;
  for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    const Vector previous = x;
    for (std::size_t j = 0; j < blocks; ++j) {
      const Vector y = x + increments[j];
      x = j < poly.halfspaces.size() ? project_halfspace(poly.halfspaces[j], y)
                                     : clamp(*poly.bounds, y);
      increments[j] = y - x;
    }
    result.sweeps = sweep;
    if ((x - previous).norm() < options.tol) {
      result.converged = true;
      break;
    }
  }
  double violation = 0.0;
  for (const auto& h : poly.halfspaces) violation = std::max(violation, halfspace_violation(h, x));
  if (poly.bounds) {
    violation = std::max(violation, (x - clamp(*poly.bounds, x)).cwiseAbs().maxCoeff());
  }
  result.max_violation = violation;
  result.point = std::move(x);
  return result;
}

Vector project(const SetSpec& set, const Vector& z) {
  require_dim(set.dim(), z.size(), "project");
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, WholeSpace>) {
          return z;
        } else if constexpr (std::is_same_v<T, NonnegativeOrthant>) {
          return z.cwiseMax(0.0);
        } else if constexpr (std::is_same_v<T, Box>) {
          return clamp(s, z);
        } else if constexpr (std::is_same_v<T, Ball>) {
          const Vector d = z - s.center;
          const double dist = d.norm();
          if (dist <= s.radius) return z;
          return s.center + (s.radius / dist) * d;
        } else {
          return project_polyhedron(s, z).point;
        }
      },
      set.variant());
}

DiameterBound diameter_bound(const SetSpec& set) {
  if (const auto* b = set.get_if<Box>()) {
    return {b->lower.cwiseAbs().cwiseMax(b->upper.cwiseAbs()).norm(), false};
  }
  if (const auto* b = set.get_if<Ball>()) {
    return {b->center.norm() + b->radius, false};
  }
  if (const auto* p = set.get_if<Polyhedron>()) {
    if (p->bounds) {
      return {p->bounds->lower.cwiseAbs().cwiseMax(p->bounds->upper.cwiseAbs()).norm(), true};
    }
  }
  throw UnsupportedError("diameter_bound: set is unbounded");
}

bool contains(const SetSpec& set, const Vector& x, double tol) {
  require_dim(set.dim(), x.size(), "contains");
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, WholeSpace>) {
          return x.allFinite();
        } else if constexpr (std::is_same_v<T, NonnegativeOrthant>) {
          return x.minCoeff() >= -tol;
        } else if constexpr (std::is_same_v<T, Box>) {
          return box_contains(s, x, tol);
        } else if constexpr (std::is_same_v<T, Ball>) {
          return (x - s.center).norm() <= s.radius + tol;
        } else {
          for (const auto& h : s.halfspaces) {
            if (halfspace_violation(h, x) > tol) return false;
          }
          return !s.bounds || box_contains(*s.bounds, x, tol);
        }
      },
      set.variant());
}

namespace {

Vector sample_box(const Box& box, Rng& rng) {
  Vector x(box.lower.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = rng.uniform(box.lower[j], box.upper[j]);
  return x;
}

}  // namespace

Vector sample_point(const SetSpec& set, Rng& rng, const std::optional<Box>& sampling_box) {
  if (sampling_box) {
    check_box(*sampling_box);
    require_dim(set.dim(), sampling_box->lower.size(), "sample_point sampling box");
  }
  if (const auto* b = set.get_if<Box>()) return sample_box(*b, rng);
  if (const auto* b = set.get_if<Ball>()) {
    const Eigen::Index n = b->center.size();
    Vector dir(n);
    for (Eigen::Index j = 0; j < n; ++j) dir[j] = rng.normal(0.0, 1.0);
    const double norm = dir.norm();
    if (norm == 0.0) return b->center;
    const double scale = b->radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(n));
    return b->center + (scale / norm) * dir;
  }
  if (const auto* p = set.get_if<Polyhedron>()) {
    const std::optional<Box>& source = p->bounds ? p->bounds : sampling_box;
    if (!source) {
      throw ArgumentError("sample_point: polyhedron without bounds needs a sampling box");
    }
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Vector x = sample_box(*source, rng);
      if (contains(set, x, 0.0)) return x;
    }
    return project(set, sample_box(*source, rng));
  }
  if (!sampling_box) {
    throw ArgumentError("sample_point: unbounded set needs a sampling box");
  }
  return project(set, sample_box(*sampling_box, rng));
}

std::vector<Vector> box_vertices(const Box& box) {
  const auto n = static_cast<std::size_t>(box.lower.size());
  if (n > 20) throw UnsupportedError("box_vertices: dimension above 20");
  std::vector<Vector> out;
  out.reserve(std::size_t{1} << n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      const auto idx = static_cast<Eigen::Index>(j);
      v[idx] = (mask >> j) & 1U ? box.upper[idx] : box.lower[idx];
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace pairig
