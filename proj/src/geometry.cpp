#include "fatswarm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fatswarm/error.hpp"

namespace fatswarm {

namespace {

// A disk as seen from a viewer: offset, center distance and the half angle it
// subtends.
struct Sighting {
  Vec2 rel;
  double dist;
  double half;
  double radius;
};

Sighting sight(const Vec2& viewer, const Disk& d) {
  Vec2 rel = d.center - viewer;
  double dist = norm(rel);
  return {rel, dist, std::asin(std::min(1.0, d.radius / dist)), d.radius};
}

// Distance along unit direction u at which the ray from the viewer enters the
// disk described by s. The ray is assumed to hit the disk.
double entry_distance(const Vec2& u, const Sighting& s) {
  double b = dot(u, s.rel);
  double h2 = s.dist * s.dist - b * b;
  double disc = std::max(0.0, s.radius * s.radius - h2);
  return b - std::sqrt(disc);
}

// Core classification. Preconditions (viewer outside both, interiors
// disjoint) are checked by the callers.
OcclusionVerdict classify(const Sighting& occ, const Sighting& tgt) {
  double signed_sep = std::atan2(cross(occ.rel, tgt.rel), dot(occ.rel, tgt.rel));
  double sep = std::abs(signed_sep);

  // Angular gap converted to arc length at the target's distance.
  double gap = (sep - (occ.half + tgt.half)) * tgt.dist;
  if (gap >= -kGeomTol) return OcclusionVerdict::FullyVisible;

  // Shared sight line through the middle of the overlapping angular interval.
  double lo = std::max(-occ.half, signed_sep - tgt.half);
  double hi = std::min(occ.half, signed_sep + tgt.half);
  double theta = 0.5 * (lo + hi);
  Vec2 axis = occ.rel * (1.0 / occ.dist);
  double c = std::cos(theta);
  double s = std::sin(theta);
  Vec2 u{axis.x * c - axis.y * s, axis.x * s + axis.y * c};
  if (entry_distance(u, tgt) < entry_distance(u, occ)) return OcclusionVerdict::FullyVisible;

  double inside = (occ.half - (sep + tgt.half)) * tgt.dist;
  if (inside > kGeomTol) return OcclusionVerdict::FullyOccluded;
  return OcclusionVerdict::PartiallyOccluded;
}

}  // namespace

const char* to_string(OcclusionVerdict v) {
  switch (v) {
    case OcclusionVerdict::FullyVisible:
      return "FullyVisible";
    case OcclusionVerdict::PartiallyOccluded:
      return "PartiallyOccluded";
    case OcclusionVerdict::FullyOccluded:
      return "FullyOccluded";
  }
  return "?";
}

ShadowRegion::ShadowRegion(Vec2 apex, Disk occluder) : apex_(apex), occluder_(occluder) {
  Vec2 rel = occluder.center - apex;
  double d = norm(rel);
  axis_ = rel * (1.0 / d);
  half_angle_ = std::asin(occluder.radius / d);
}

std::pair<Vec2, Vec2> ShadowRegion::tangent_points() const {
  // Tangent points lie at angle (pi/2 - half) from the reversed axis around the center.
  double d = distance(apex_, occluder_.center);
  double along = occluder_.radius * occluder_.radius / d;
  double across = occluder_.radius * std::cos(half_angle_);
  Vec2 base = occluder_.center - axis_ * along;
  Vec2 perp{-axis_.y, axis_.x};
  return {base + perp * across, base - perp * across};
}

bool ShadowRegion::contains(const Vec2& p) const {
  const Vec2& c = occluder_.center;
  double r = occluder_.radius;
  if (distance(p, c) <= r) return false;
  // Closest point of segment apex-p to the occluder center.
  Vec2 seg = p - apex_;
  double len2 = dot(seg, seg);
  double t = len2 > 0.0 ? std::clamp(dot(c - apex_, seg) / len2, 0.0, 1.0) : 0.0;
  return distance(apex_ + seg * t, c) < r;
}

ShadowRegion shadow_of(const Vec2& viewer, const Disk& occluder) {
  if (!is_finite(viewer) || !is_finite(occluder.center) || !(occluder.radius > 0.0))
    throw Error(ErrorCode::InvalidArgument, "shadow_of: non-finite input or non-positive radius");
  if (distance(viewer, occluder.center) <= occluder.radius + kGeomTol)
    throw Error(ErrorCode::ViewerInsideOccluder, "shadow_of: viewer is not outside the occluder");
  return ShadowRegion(viewer, occluder);
}

OcclusionVerdict occlusion_verdict(const Vec2& viewer, const Disk& occluder, const Disk& target) {
  if (!is_finite(viewer) || !is_finite(occluder.center) || !is_finite(target.center) ||
      !(occluder.radius > 0.0) || !(target.radius > 0.0))
    throw Error(ErrorCode::InvalidArgument, "occlusion_verdict: non-finite input or non-positive radius");
  if (distance(viewer, occluder.center) <= occluder.radius + kGeomTol ||
      distance(viewer, target.center) <= target.radius + kGeomTol)
    throw Error(ErrorCode::ViewerInsideDisk, "occlusion_verdict: viewer lies inside a disk");
  if (distance(occluder.center, target.center) < occluder.radius + target.radius - kGeomTol)
    throw Error(ErrorCode::OverlappingDisks, "occlusion_verdict: occluder and target overlap");
  return classify(sight(viewer, occluder), sight(viewer, target));
}

std::size_t VisibilityCensus::total_all() const {
  return std::accumulate(g_all.begin(), g_all.end(), std::size_t{0});
}

std::size_t VisibilityCensus::total_vis() const {
  return std::accumulate(g_vis.begin(), g_vis.end(), std::size_t{0});
}

namespace {

// Whether target j is fully visible from viewer i given the per-viewer
// sightings. Configurations that break the classifier preconditions (only
// reachable in colliding states) count as occluded.
bool fully_visible_from(const std::vector<Sighting>& seen, const SwarmState& state, std::size_t i,
                        std::size_t j, double r_bot) {
  const Sighting& tgt = seen[j];
  if (tgt.dist <= r_bot + kGeomTol) return false;
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (k == i || k == j) continue;
    const Sighting& occ = seen[k];
    if (occ.dist <= r_bot + kGeomTol) return false;
    if (distance(state.positions[k], state.positions[j]) < 2.0 * r_bot - kGeomTol) {
      double sep = std::atan2(std::abs(cross(occ.rel, tgt.rel)), dot(occ.rel, tgt.rel));
      if ((sep - occ.half - tgt.half) * tgt.dist < -kGeomTol) return false;
      continue;
    }
    if (classify(occ, tgt) != OcclusionVerdict::FullyVisible) return false;
  }
  return true;
}

std::vector<Sighting> sightings_from(const SwarmState& state, std::size_t i, double r_bot) {
  std::vector<Sighting> seen(state.size());
  for (std::size_t k = 0; k < state.size(); ++k) {
    if (k == i) continue;
    seen[k] = sight(state.positions[i], Disk{state.positions[k], r_bot});
  }
  return seen;
}

}  // namespace

bool sees_fully(const SwarmState& state, std::size_t i, std::size_t j, double r_bot) {
  auto seen = sightings_from(state, i, r_bot);
  return fully_visible_from(seen, state, i, j, r_bot);
}

bool mutually_visible(const SwarmState& state, std::size_t i, std::size_t j, const SwarmConfig& cfg) {
  if (i >= state.size() || j >= state.size())
    throw Error(ErrorCode::IndexOutOfRange, "mutually_visible: robot index out of range");
  if (i == j) throw Error(ErrorCode::InvalidArgument, "mutually_visible: i and j must differ");
  return sees_fully(state, i, j, cfg.r_bot) && sees_fully(state, j, i, cfg.r_bot);
}

VisibilityCensus visibility_census(const SwarmState& state, const SwarmConfig& cfg) {
  const std::size_t n = state.size();
  VisibilityCensus census;
  census.g_all.assign(n, 0);
  census.g_vis.assign(n, 0);
  census.g_occ.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto seen = sightings_from(state, i, cfg.r_bot);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || seen[j].dist > cfg.r_scan) continue;
      ++census.g_all[i];
      if (fully_visible_from(seen, state, i, j, cfg.r_bot))
        ++census.g_vis[i];
      else
        ++census.g_occ[i];
    }
  }
  return census;
}

std::vector<std::pair<std::size_t, std::size_t>> collision_pairs(const SwarmState& state,
                                                                 const SwarmConfig& cfg) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  const double limit = 2.0 * cfg.r_bot - kGeomTol;
  for (std::size_t i = 0; i < state.size(); ++i)
    for (std::size_t j = i + 1; j < state.size(); ++j)
      if (distance(state.positions[i], state.positions[j]) < limit) pairs.emplace_back(i, j);
  return pairs;
}

bool has_collision(const SwarmState& state, const SwarmConfig& cfg) {
  const double limit = 2.0 * cfg.r_bot - kGeomTol;
  for (std::size_t i = 0; i < state.size(); ++i)
    for (std::size_t j = i + 1; j < state.size(); ++j)
      if (distance(state.positions[i], state.positions[j]) < limit) return true;
  return false;
}

}  // namespace fatswarm
