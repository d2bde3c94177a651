#pragma once

#include "scene_informer/scene.hpp"

namespace scene_informer {

// Transform mapping scene coordinates into the ego frame at prediction time.
// Throws Error(kMissingEgo) when the ego has no state at that step.
Rigid2 ego_frame_transform(const Scene& scene);

// Applies `transform` to every position, heading, velocity, polyline point and
// annotation in the scene.
Scene transform_scene(const Scene& scene, const Rigid2& transform);

// Ego at the origin with heading 0 at the prediction step.
Scene to_ego_frame(const Scene& scene);

// Greedy walk from the first point: a point is kept when it lies at least
// `min_spacing` from the last kept point. First and last points always kept.
Polyline resample_polyline(const Polyline& polyline, double min_spacing);

// Drops agents farther than `radius` from the origin at prediction time and
// clips polylines to the disk, splitting them into contiguous inside runs.
Scene crop_to_radius(const Scene& scene, double radius);

// to_ego_frame + resampling every polyline at `min_spacing` + crop at scene.radius.
Scene prepare_scene(const Scene& scene, double min_spacing = 1.5);

}  // namespace scene_informer
