#include "cpl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cpl/error.hpp"
#include "cpl/mfc.hpp"
#include "cpl/rng.hpp"

namespace cpl {

namespace {

void check_interval(const Interval& iv, const char* name) {
  if (!(iv.lo > 0.0) || !(iv.hi >= iv.lo))
    fail(ErrorKind::validity, std::string("invalid interval for ") + name);
}

void check_range(const SizeRange& r, ClassId expected) {
  check_interval(r.l, "l");
  check_interval(r.w, "w");
  check_interval(r.h, "h");
  // Every corner of the sampling range must classify back to its class,
  // otherwise generated scenes are not classifiable by the size rules.
  const auto rules = default_class_rules();
  for (int corner = 0; corner < 8; ++corner) {
    Box3D box;
    box.l = (corner & 1) ? r.l.hi : r.l.lo;
    box.w = (corner & 2) ? r.w.hi : r.w.lo;
    box.h = (corner & 4) ? r.h.hi : r.h.lo;
    if (classify_box(box, rules) != expected)
      fail(ErrorKind::validity,
           std::string("size range for ") + to_string(expected) +
               " is not classifiable back to that class");
  }
}

struct SceneObject {
  int id = 0;
  ClassId beta = ClassId::vehicle;
  double l = 0, w = 0, h = 0;
  double x0 = 0, y0 = 0;  // BEV center at frame 0, global
  double alpha = 0;
  bool moving = false;
  double vx = 0, vy = 0;
  double intensity = 0.5;

  double cx(double t) const { return x0 + vx * t; }
  double cy(double t) const { return y0 + vy * t; }
};

double sample(const Interval& iv, double t) {
  return iv.lo + t * (iv.hi - iv.lo);
}

// One cuboid face: center offset, outward normal, and in-plane axes with
// half-extents, all in the object's local frame.
struct Face {
  double off[3];
  double normal[3];
  double axis1[3];
  double axis2[3];
  double half1, half2;
};

std::vector<Face> object_faces(const SceneObject& o) {
  const double hl = 0.5 * o.l, hw = 0.5 * o.w, hh = 0.5 * o.h;
  return {
      {{hl, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, hw, hh},
      {{-hl, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, 0, 1}, hw, hh},
      {{0, hw, 0}, {0, 1, 0}, {1, 0, 0}, {0, 0, 1}, hl, hh},
      {{0, -hw, 0}, {0, -1, 0}, {1, 0, 0}, {0, 0, 1}, hl, hh},
      {{0, 0, hh}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, hl, hw},
  };
}

struct ObjPose {
  double cx, cy, cz, cos_a, sin_a;

  void to_world(const double local[3], double out[3]) const {
    out[0] = cx + cos_a * local[0] - sin_a * local[1];
    out[1] = cy + sin_a * local[0] + cos_a * local[1];
    out[2] = cz + local[2];
  }
  void rotate(const double local[3], double out[3]) const {
    out[0] = cos_a * local[0] - sin_a * local[1];
    out[1] = sin_a * local[0] + cos_a * local[1];
    out[2] = local[2];
  }
  void to_local(const double world[3], double out[3]) const {
    const double dx = world[0] - cx, dy = world[1] - cy;
    out[0] = cos_a * dx + sin_a * dy;
    out[1] = -sin_a * dx + cos_a * dy;
    out[2] = world[2] - cz;
  }
};

// Segment from `a` to `b` against the object's axis-aligned local cuboid
// (slab test); intersections at the segment ends don't count.
bool segment_hits_box(const ObjPose& pose, const SceneObject& o,
                      const double a[3], const double b[3]) {
  double la[3], lb[3];
  pose.to_local(a, la);
  pose.to_local(b, lb);
  const double half[3] = {0.5 * o.l, 0.5 * o.w, 0.5 * o.h};
  double t0 = 1e-6, t1 = 1.0 - 1e-6;
  for (int k = 0; k < 3; ++k) {
    const double d = lb[k] - la[k];
    if (std::fabs(d) < 1e-12) {
      if (std::fabs(la[k]) > half[k]) return false;
      continue;
    }
    double ta = (-half[k] - la[k]) / d;
    double tb = (half[k] - la[k]) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

void validate_synth_config(const SynthConfig& cfg) {
  if (cfg.num_frames < 1) fail(ErrorKind::validity, "num_frames must be >= 1");
  if (!(cfg.frame_dt > 0.0)) fail(ErrorKind::validity, "frame_dt must be positive");
  if (cfg.vehicles < 0 || cfg.pedestrians < 0 || cfg.cyclists < 0)
    fail(ErrorKind::validity, "object counts must be non-negative");
  if (!(cfg.point_density_at_10m > 0.0) || !(cfg.ground_density_at_10m > 0.0))
    fail(ErrorKind::validity, "point densities must be positive");
  if (!(cfg.range_max > 0.0)) fail(ErrorKind::validity, "range_max must be positive");
  if (!(cfg.moving_fraction >= 0.0 && cfg.moving_fraction <= 1.0))
    fail(ErrorKind::validity, "moving_fraction must lie in [0,1]");
  if (!(cfg.placement_min > 0.0 && cfg.placement_max > cfg.placement_min))
    fail(ErrorKind::validity, "placement range must satisfy 0 < min < max");
  if (!(cfg.ground_inner > 0.0 && cfg.ground_radius > cfg.ground_inner))
    fail(ErrorKind::validity, "ground radii must satisfy 0 < inner < radius");
  if (!(cfg.noise_sigma >= 0.0)) fail(ErrorKind::validity, "noise_sigma must be >= 0");
  if (!(cfg.ego_speed >= 0.0)) fail(ErrorKind::validity, "ego_speed must be >= 0");
  check_range(cfg.vehicle_size, ClassId::vehicle);
  check_range(cfg.pedestrian_size, ClassId::pedestrian);
  check_range(cfg.cyclist_size, ClassId::cyclist);
  check_interval(cfg.vehicle_speed, "vehicle_speed");
  check_interval(cfg.pedestrian_speed, "pedestrian_speed");
  check_interval(cfg.cyclist_speed, "cyclist_speed");
}

namespace {

std::vector<SceneObject> place_objects(const SynthConfig& cfg) {
  Rng rng = Rng::substream(cfg.seed, 0x5CE);
  std::vector<SceneObject> objects;

  struct ClassPlan {
    ClassId beta;
    int count;
    const SizeRange* size;
    const Interval* speed;
  };
  const ClassPlan plan[3] = {
      {ClassId::vehicle, cfg.vehicles, &cfg.vehicle_size, &cfg.vehicle_speed},
      {ClassId::pedestrian, cfg.pedestrians, &cfg.pedestrian_size,
       &cfg.pedestrian_speed},
      {ClassId::cyclist, cfg.cyclists, &cfg.cyclist_size, &cfg.cyclist_speed},
  };

  int id = 0;
  for (const ClassPlan& cp : plan) {
    for (int k = 0; k < cp.count; ++k) {
      SceneObject o;
      o.id = id++;
      o.beta = cp.beta;
      // One shared draw keeps (l,w,h) correlated within an object; a small
      // per-dimension jitter avoids degenerate identical shapes.
      const double u = rng.uniform();
      auto dim_t = [&] {
        return std::clamp(u + 0.15 * (rng.uniform() - 0.5), 0.0, 1.0);
      };
      o.l = sample(cp.size->l, dim_t());
      o.w = sample(cp.size->w, dim_t());
      o.h = sample(cp.size->h, dim_t());
      if (o.w > o.l) std::swap(o.l, o.w);
      o.moving = rng.uniform() < cfg.moving_fraction;
      const double heading = rng.uniform(-M_PI, M_PI);
      if (o.moving) {
        const double speed = sample(*cp.speed, rng.uniform());
        o.vx = speed * std::cos(heading);
        o.vy = speed * std::sin(heading);
        o.alpha = normalize_angle(heading);
      } else {
        o.alpha = normalize_angle(rng.uniform(-M_PI, M_PI));
      }
      o.intensity =
          0.2 + 0.6 * std::fmod(0.6180339887498949 * (o.id + 1), 1.0);

      bool placed = false;
      for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
        const double d = cfg.placement_min +
                         (cfg.placement_max - cfg.placement_min) *
                             std::sqrt(rng.uniform());
        const double phi = rng.uniform(0.0, 2.0 * M_PI);
        o.x0 = d * std::cos(phi);
        o.y0 = d * std::sin(phi);

        bool ok = true;
        const double diag_o = std::hypot(o.l, o.w);
        for (int f = 0; f < cfg.num_frames && ok; ++f) {
          const double t = f * cfg.frame_dt;
          const double ox = o.cx(t), oy = o.cy(t);
          const double ex = cfg.ego_speed * t;
          if (std::hypot(ox - ex, oy) < cfg.placement_min) ok = false;
          for (const SceneObject& other : objects) {
            const double sep = 0.5 * (diag_o + std::hypot(other.l, other.w)) + 1.0;
            if (std::hypot(ox - other.cx(t), oy - other.cy(t)) < sep) {
              ok = false;
              break;
            }
          }
        }
        placed = ok;
      }
      if (!placed)
        fail(ErrorKind::validity,
             "could not place objects without overlap; reduce counts or widen "
             "placement range");
      objects.push_back(o);
    }
  }
  return objects;
}

}  // namespace

std::pair<Sequence, GroundTruth> generate_scene(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  const std::vector<SceneObject> objects = place_objects(cfg);
  const double slope = std::tan(cfg.ground_slope_deg * M_PI / 180.0);

  Sequence seq;
  seq.id = "synth";
  GroundTruth gt;
  gt.frames.resize(cfg.num_frames);
  gt.point_object_ids.resize(cfg.num_frames);

  for (int f = 0; f < cfg.num_frames; ++f) {
    Rng rng = Rng::substream(cfg.seed, 0x10000 + static_cast<std::uint64_t>(f));
    const double t = f * cfg.frame_dt;
    const double ego_x = cfg.ego_speed * t;
    const double sensor[3] = {ego_x, 0.0, cfg.sensor_height};

    PointCloud global;
    std::vector<int>& ids = gt.point_object_ids[f];

    // Ground: log-uniform radius gives the 1/d^2 area density.
    const double ratio = cfg.ground_radius / cfg.ground_inner;
    const double expected = 2.0 * M_PI * cfg.ground_density_at_10m * 100.0 *
                            std::log(ratio);
    std::size_t ground_count = static_cast<std::size_t>(expected);
    if (rng.uniform() < expected - static_cast<double>(ground_count))
      ++ground_count;
    for (std::size_t i = 0; i < ground_count; ++i) {
      const double d = cfg.ground_inner * std::pow(ratio, rng.uniform());
      const double phi = rng.uniform(0.0, 2.0 * M_PI);
      const double x = ego_x + d * std::cos(phi);
      const double y = d * std::sin(phi);
      const double z = slope * x + cfg.noise_sigma * rng.normal();
      global.push_back({x, y, z, 0.1});
      ids.push_back(-1);
    }

    // Object poses this frame.
    std::vector<ObjPose> poses(objects.size());
    for (std::size_t j = 0; j < objects.size(); ++j) {
      const SceneObject& o = objects[j];
      poses[j] = {o.cx(t), o.cy(t), slope * o.cx(t) + 0.5 * o.h,
                  std::cos(o.alpha), std::sin(o.alpha)};
    }

    for (std::size_t j = 0; j < objects.size(); ++j) {
      const SceneObject& o = objects[j];
      const ObjPose& pose = poses[j];
      for (const Face& face : object_faces(o)) {
        double fc[3], n[3];
        pose.to_world(face.off, fc);
        pose.rotate(face.normal, n);
        const double view[3] = {sensor[0] - fc[0], sensor[1] - fc[1],
                                sensor[2] - fc[2]};
        const double dist =
            std::sqrt(view[0] * view[0] + view[1] * view[1] + view[2] * view[2]);
        if (dist > cfg.range_max || dist < 1e-6) continue;
        const double cos_inc =
            (n[0] * view[0] + n[1] * view[1] + n[2] * view[2]) / dist;
        if (cos_inc <= 1e-6) continue;
        const double area = 4.0 * face.half1 * face.half2;
        double lambda = area * cfg.point_density_at_10m * (100.0 / (dist * dist)) *
                        cos_inc;
        lambda = std::min(lambda, 4000.0);
        std::size_t count = static_cast<std::size_t>(lambda);
        if (rng.uniform() < lambda - static_cast<double>(count)) ++count;

        for (std::size_t s = 0; s < count; ++s) {
          const double a = (rng.uniform() - 0.5) * 2.0 * face.half1;
          const double b = (rng.uniform() - 0.5) * 2.0 * face.half2;
          const double local[3] = {
              face.off[0] + a * face.axis1[0] + b * face.axis2[0],
              face.off[1] + a * face.axis1[1] + b * face.axis2[1],
              face.off[2] + a * face.axis1[2] + b * face.axis2[2]};
          double p[3];
          pose.to_world(local, p);

          if (cfg.occlusion) {
            bool blocked = false;
            for (std::size_t m = 0; m < objects.size() && !blocked; ++m) {
              if (m == j) continue;
              blocked = segment_hits_box(poses[m], objects[m], sensor, p);
            }
            if (blocked) continue;
          }

          p[0] += cfg.noise_sigma * rng.normal();
          p[1] += cfg.noise_sigma * rng.normal();
          p[2] += cfg.noise_sigma * rng.normal();
          // Keep the noisy point inside its ground-truth box.
          double lp[3];
          pose.to_local(p, lp);
          lp[0] = std::clamp(lp[0], -0.5 * o.l, 0.5 * o.l);
          lp[1] = std::clamp(lp[1], -0.5 * o.w, 0.5 * o.w);
          lp[2] = std::clamp(lp[2], -0.5 * o.h, 0.5 * o.h);
          pose.to_world(lp, p);

          global.push_back({p[0], p[1], p[2], o.intensity});
          ids.push_back(o.id);
        }
      }

    }

    // Record ground truth for this frame.
    for (std::size_t j = 0; j < objects.size(); ++j) {
      const SceneObject& o = objects[j];
      const ObjPose& pose = poses[j];
      gt.frames[f].push_back({Box3D{pose.cx, pose.cy, pose.cz, o.l, o.w, o.h,
                                    normalize_angle(o.alpha)},
                              o.beta, o.id, o.moving});
    }

    Frame frame;
    frame.index = f;
    frame.timestamp = t;
    frame.pose.translation = Eigen::Vector3d(ego_x, 0.0, 0.0);
    frame.points.reserve(global.size());
    for (std::size_t i = 0; i < global.size(); ++i) {
      Point p = global.point(i);
      p.x -= ego_x;
      frame.points.push_back(p);
    }
    seq.frames.push_back(std::move(frame));
  }
  return {std::move(seq), std::move(gt)};
}

std::vector<Label> ground_truth_labels(const Sequence& seq,
                                       const GroundTruth& gt) {
  if (seq.frames.size() != gt.frames.size())
    fail(ErrorKind::validity, "sequence and ground truth frame counts differ");
  std::vector<Label> labels;
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const Frame& frame = seq.frames[f];
    const double ego_yaw =
        std::atan2(frame.pose.rotation(1, 0), frame.pose.rotation(0, 0));
    const Pose to_ego = invert_pose(frame.pose);
    for (const GtBox& g : gt.frames[f]) {
      Label label;
      const Point c = apply_pose(to_ego, {g.box.x, g.box.y, g.box.z, 0.0});
      label.box = g.box;
      label.box.x = c.x;
      label.box.y = c.y;
      label.box.z = c.z;
      label.box.alpha = normalize_angle(g.box.alpha - ego_yaw);
      label.beta = g.beta;
      label.tau = g.object_id;
      label.frame_index = frame.index;
      labels.push_back(label);
    }
  }
  return labels;
}

}  // namespace cpl
