#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fatswarm/swarm.hpp"

namespace fatswarm {

/// Tolerance (world units) for tangency ties and touching bodies.
inline constexpr double kGeomTol = 1e-9;

enum class OcclusionVerdict { FullyVisible, PartiallyOccluded, FullyOccluded };

const char* to_string(OcclusionVerdict v);

/// Shadow cast by an opaque disk lit by a point source at `apex`.
///
/// The region is the set of points p outside the occluder for which the
/// segment apex-p passes through the occluder interior. Geometrically it is
/// the tangent cone from the apex, truncated by the far arc of the occluder.
class ShadowRegion {
 public:
  ShadowRegion(Vec2 apex, Disk occluder);

  const Vec2& apex() const { return apex_; }
  const Disk& occluder() const { return occluder_; }
  /// Half opening angle of the tangent cone.
  double half_angle() const { return half_angle_; }
  /// Unit vector from the apex to the occluder center.
  const Vec2& axis() const { return axis_; }
  /// The two tangent points on the occluder circle (counter-clockwise first).
  std::pair<Vec2, Vec2> tangent_points() const;

  bool contains(const Vec2& p) const;

 private:
  Vec2 apex_;
  Disk occluder_;
  Vec2 axis_;
  double half_angle_;
};

/// Throws Error(ViewerInsideOccluder) if the viewer is not strictly outside.
ShadowRegion shadow_of(const Vec2& viewer, const Disk& occluder);

/// Classifies how much of `target` lies in the shadow of `occluder` seen from
/// `viewer`. Compares the angular intervals both disks subtend at the viewer
/// and, where they overlap, which disk is nearer along a shared sight line.
/// Tangency ties within kGeomTol resolve toward the less occluded verdict.
OcclusionVerdict occlusion_verdict(const Vec2& viewer, const Disk& occluder, const Disk& target);

/// Per-robot neighbor counts from the sensor model.
struct VisibilityCensus {
  std::vector<std::size_t> g_all;
  std::vector<std::size_t> g_vis;
  std::vector<std::size_t> g_occ;

  std::size_t size() const { return g_all.size(); }
  std::size_t total_all() const;
  std::size_t total_vis() const;
};

/// True iff robot j is not shadowed by any third robot as seen from robot
/// i's center. Every other robot acts as an occluder, regardless of range.
/// Degenerate (overlapping) configurations count as occluded.
bool sees_fully(const SwarmState& state, std::size_t i, std::size_t j, double r_bot);

bool mutually_visible(const SwarmState& state, std::size_t i, std::size_t j, const SwarmConfig& cfg);

VisibilityCensus visibility_census(const SwarmState& state, const SwarmConfig& cfg);

/// Unordered pairs (i < j) whose bodies overlap; touching is not overlap.
std::vector<std::pair<std::size_t, std::size_t>> collision_pairs(const SwarmState& state,
                                                                 const SwarmConfig& cfg);

bool has_collision(const SwarmState& state, const SwarmConfig& cfg);

}  // namespace fatswarm
