#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "ebme/png_io.hpp"

namespace ebme {

template <typename T>
struct Triplet {
  Tensor<T> frame0, frame_t, frame1;
  T t = T(0.5);
  bool has_gt_flow = false;
  Tensor<T> gt_flow01, gt_flow10;
};

// A procedurally generated scene: textured rectangles sliding linearly over a
// textured (optionally moving) background. Flows are exact by construction.
struct SyntheticSceneSpec {
  int height = 128;
  int width = 128;
  int num_objects = 3;
  int min_object_size = 24;
  int max_object_size = 64;
  double max_displacement = 12.0;
  double max_rotation = 0.0;  // radians, per object, about its center
  double background_dx = 0.0;
  double background_dy = 0.0;
  double t = 0.5;
  uint64_t texture_seed = 0;
};

inline nlohmann::json scene_spec_to_json(const SyntheticSceneSpec& s) {
  return {{"height", s.height},
          {"width", s.width},
          {"num_objects", s.num_objects},
          {"min_object_size", s.min_object_size},
          {"max_object_size", s.max_object_size},
          {"max_displacement", s.max_displacement},
          {"max_rotation", s.max_rotation},
          {"background_dx", s.background_dx},
          {"background_dy", s.background_dy},
          {"t", s.t},
          {"texture_seed", s.texture_seed}};
}

inline SyntheticSceneSpec scene_spec_from_json(const nlohmann::json& j) {
  SyntheticSceneSpec s;
  s.height = j.value("height", s.height);
  s.width = j.value("width", s.width);
  s.num_objects = j.value("num_objects", s.num_objects);
  s.min_object_size = j.value("min_object_size", s.min_object_size);
  s.max_object_size = j.value("max_object_size", s.max_object_size);
  s.max_displacement = j.value("max_displacement", s.max_displacement);
  s.max_rotation = j.value("max_rotation", s.max_rotation);
  s.background_dx = j.value("background_dx", s.background_dx);
  s.background_dy = j.value("background_dy", s.background_dy);
  s.t = j.value("t", s.t);
  s.texture_seed = j.value("texture_seed", s.texture_seed);
  return s;
}

namespace detail {

// A procedural texture that can be sampled exactly at fractional positions
// for any time slice. Many sinusoids with random directions and log-spread
// frequencies give a broadband, aperiodic pattern; a narrowband texture would
// make photometric matching ambiguous up to the dominant period.
struct ProcTexture {
  static constexpr int kWaves = 16;
  double amp[3][kWaves], fu[3][kWaves], fv[3][kWaves], phase[3][kWaves];

  ProcTexture() : amp{}, fu{}, fv{}, phase{} {}
  explicit ProcTexture(std::mt19937& rng) {
    std::uniform_real_distribution<double> a(0.02, 0.07), lf(std::log(0.03), std::log(0.7)),
        ang(0.0, 2.0 * M_PI), p(0.0, 2.0 * M_PI);
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < kWaves; ++k) {
        const double f = std::exp(lf(rng)), t = ang(rng);
        // ~1/f amplitude falloff: strong smooth structure plus fine detail, so
        // photometric alignment has a wide, non-flat basin at every scale.
        amp[c][k] = std::min(a(rng) * std::pow(0.08 / f, 0.8), 0.22);
        fu[c][k] = f * std::cos(t);
        fv[c][k] = f * std::sin(t);
        phase[c][k] = p(rng);
      }
  }

  double sample(double u, double v, int c) const {
    double s = 0.5;
    for (int k = 0; k < kWaves; ++k)
      s += amp[c][k] * std::sin(fu[c][k] * u + fv[c][k] * v + phase[c][k]);
    return std::clamp(s, 0.0, 1.0);
  }
};

struct SceneObject {
  double cx0, cy0;   // center at time 0
  double dx, dy;     // total displacement from time 0 to time 1
  double theta = 0;  // total rotation about the center, time 0 to time 1
  int w, h;
  ProcTexture tex;

  // Local (texture) coordinates of p at time tau, i.e. undo motion+rotation.
  void local(double x, double y, double tau, double& lx, double& ly) const {
    double px = x - (cx0 + tau * dx), py = y - (cy0 + tau * dy);
    double c = std::cos(-tau * theta), s = std::sin(-tau * theta);
    lx = c * px - s * py;
    ly = s * px + c * py;
  }

  bool covers(double x, double y, double tau) const {
    double lx, ly;
    local(x, y, tau, lx, ly);
    return std::abs(lx) <= w * 0.5 && std::abs(ly) <= h * 0.5;
  }
};

}  // namespace detail

template <typename T = float>
Triplet<T> generate_synthetic_triplet(const SyntheticSceneSpec& spec, uint64_t seed) {
  if (spec.height < 8 || spec.width < 8 || spec.num_objects < 0 ||
      !(spec.t > 0.0 && spec.t < 1.0)) {
    throw InputError("synthetic scene: invalid spec");
  }
  if (spec.max_object_size > std::min(spec.height, spec.width)) {
    throw InputError("synthetic scene: object larger than canvas");
  }
  std::mt19937 rng(static_cast<uint32_t>(spec.texture_seed * 0x9e3779b97f4a7c15ULL + seed));
  detail::ProcTexture background(rng);

  std::vector<detail::SceneObject> objects;
  std::uniform_real_distribution<double> disp(-spec.max_displacement, spec.max_displacement);
  std::uniform_real_distribution<double> rot(-spec.max_rotation, spec.max_rotation);
  std::uniform_int_distribution<int> size_dist(spec.min_object_size, spec.max_object_size);
  for (int i = 0; i < spec.num_objects; ++i) {
    detail::SceneObject obj;
    obj.dx = disp(rng);
    obj.dy = disp(rng);
    obj.theta = rot(rng);
    obj.w = size_dist(rng);
    obj.h = size_dist(rng);
    obj.tex = detail::ProcTexture(rng);
    // Keep the (possibly rotating) rectangle inside the canvas throughout.
    double r = obj.theta != 0 ? 0.5 * std::hypot(obj.w, obj.h)
                              : 0.5 * std::max(obj.w, obj.h);
    double xlo = r + std::max(0.0, -obj.dx), xhi = spec.width - r - std::max(0.0, obj.dx);
    double ylo = r + std::max(0.0, -obj.dy), yhi = spec.height - r - std::max(0.0, obj.dy);
    if (xhi < xlo || yhi < ylo) {
      obj.dx = obj.dy = obj.theta = 0;
      xlo = r, xhi = spec.width - r, ylo = r, yhi = spec.height - r;
      if (xhi < xlo || yhi < ylo) throw InputError("synthetic scene: object larger than canvas");
    }
    obj.cx0 = std::uniform_real_distribution<double>(xlo, xhi)(rng);
    obj.cy0 = std::uniform_real_distribution<double>(ylo, yhi)(rng);
    objects.push_back(std::move(obj));
  }

  // Topmost object covering (x, y) at time tau, or -1 for background.
  auto hit = [&](double x, double y, double tau) {
    for (int i = static_cast<int>(objects.size()) - 1; i >= 0; --i) {
      if (objects[i].covers(x, y, tau)) return i;
    }
    return -1;
  };

  auto render = [&](double tau) {
    Tensor<T> img(1, spec.height, spec.width, 3);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        int i = hit(x, y, tau);
        for (int c = 0; c < 3; ++c) {
          double v;
          if (i >= 0) {
            double lx, ly;
            objects[i].local(x, y, tau, lx, ly);
            v = objects[i].tex.sample(lx, ly, c);
          } else {
            v = background.sample(x - tau * spec.background_dx,
                                  y - tau * spec.background_dy, c);
          }
          img(0, y, x, c) = static_cast<T>(v);
        }
      }
    return img;
  };

  // Exact flow leaving time tau (sign +1: 0->1 at tau=0; sign -1: 1->0 at tau=1).
  auto flow_at = [&](double tau, double sign) {
    Tensor<T> flow(1, spec.height, spec.width, 2);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        int i = hit(x, y, tau);
        double fx, fy;
        if (i >= 0) {
          const auto& o = objects[i];
          // Rotate the center offset by the signed total rotation, then add
          // the signed displacement.
          double px = x - (o.cx0 + tau * o.dx), py = y - (o.cy0 + tau * o.dy);
          double c = std::cos(sign * o.theta), s = std::sin(sign * o.theta);
          fx = sign * o.dx + (c * px - s * py) - px;
          fy = sign * o.dy + (s * px + c * py) - py;
        } else {
          fx = sign * spec.background_dx;
          fy = sign * spec.background_dy;
        }
        flow(0, y, x, 0) = static_cast<T>(fx);
        flow(0, y, x, 1) = static_cast<T>(fy);
      }
    return flow;
  };

  Triplet<T> out;
  out.frame0 = render(0.0);
  out.frame_t = render(spec.t);
  out.frame1 = render(1.0);
  out.t = static_cast<T>(spec.t);
  out.has_gt_flow = true;
  out.gt_flow01 = flow_at(0.0, 1.0);
  out.gt_flow10 = flow_at(1.0, -1.0);
  return out;
}

inline Triplet<float> load_triplet_dir(const std::string& path) {
  namespace fs = std::filesystem;
  std::array<std::string, 3> names = {"im1.png", "im2.png", "im3.png"};
  std::array<Tensor<float>, 3> imgs;
  for (int i = 0; i < 3; ++i) {
    fs::path p = fs::path(path) / names[i];
    if (!fs::exists(p)) throw InputError("triplet: missing " + p.string());
    imgs[i] = read_png(p.string());
  }
  for (int i = 1; i < 3; ++i) {
    if (!imgs[i].same_shape(imgs[0])) {
      throw InputError("triplet: size mismatch between " + (fs::path(path) / names[0]).string() +
                       " (" + imgs[0].shape_str() + ") and " +
                       (fs::path(path) / names[i]).string() + " (" + imgs[i].shape_str() + ")");
    }
  }
  Triplet<float> out;
  out.frame0 = std::move(imgs[0]);
  out.frame_t = std::move(imgs[1]);
  out.frame1 = std::move(imgs[2]);
  return out;
}

namespace detail {

template <typename T>
Tensor<T> flip_h(const Tensor<T>& t, bool negate_u) {
  Tensor<T> out(t.n, t.h, t.w, t.c);
  for (int n = 0; n < t.n; ++n)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x)
        for (int c = 0; c < t.c; ++c) {
          T v = t(n, y, t.w - 1 - x, c);
          out(n, y, x, c) = (negate_u && c % 2 == 0) ? -v : v;
        }
  return out;
}

template <typename T>
Tensor<T> flip_v(const Tensor<T>& t, bool negate_v) {
  Tensor<T> out(t.n, t.h, t.w, t.c);
  for (int n = 0; n < t.n; ++n)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x)
        for (int c = 0; c < t.c; ++c) {
          T v = t(n, t.h - 1 - y, x, c);
          out(n, y, x, c) = (negate_v && c % 2 == 1) ? -v : v;
        }
  return out;
}

// 90-degree counter-clockwise rotation; flow vectors (u,v) become (v,-u).
template <typename T>
Tensor<T> rot90_ccw(const Tensor<T>& t, bool is_flow) {
  Tensor<T> out(t.n, t.w, t.h, t.c);
  for (int n = 0; n < t.n; ++n)
    for (int i = 0; i < t.w; ++i)
      for (int j = 0; j < t.h; ++j)
        for (int c = 0; c < t.c; ++c) out(n, i, j, c) = t(n, j, t.w - 1 - i, c);
  if (is_flow) {
    for (Eigen::Index k = 0; k + 1 < out.size(); k += 2) {
      T u = out.data[k], v = out.data[k + 1];
      out.data[k] = v;
      out.data[k + 1] = -u;
    }
  }
  return out;
}

template <typename T>
Tensor<T> crop_plain(const Tensor<T>& t, int y0, int x0, int ch, int cw) {
  Tensor<T> out(t.n, ch, cw, t.c);
  for (int n = 0; n < t.n; ++n)
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x)
        for (int c = 0; c < t.c; ++c) out(n, y, x, c) = t(n, y0 + y, x0 + x, c);
  return out;
}

}  // namespace detail

template <typename T>
Triplet<T> reverse_time(Triplet<T> tr) {
  std::swap(tr.frame0, tr.frame1);
  std::swap(tr.gt_flow01, tr.gt_flow10);
  tr.t = T(1) - tr.t;
  return tr;
}

// Random crop plus flips / 90-degree rotation / temporal reversal, with exact
// ground-truth flow transforms.
template <typename T>
Triplet<T> augment(const Triplet<T>& in, int crop_size, std::mt19937& rng) {
  if (in.frame0.h < crop_size || in.frame0.w < crop_size) {
    throw RangeError("augment: frame " + in.frame0.shape_str() + " smaller than crop " +
                     std::to_string(crop_size));
  }
  std::uniform_int_distribution<int> oy(0, in.frame0.h - crop_size);
  std::uniform_int_distribution<int> ox(0, in.frame0.w - crop_size);
  std::uniform_int_distribution<int> coin(0, 1);
  const int y0 = oy(rng), x0 = ox(rng);
  const bool hflip = coin(rng), vflip = coin(rng), rot = coin(rng), rev = coin(rng);

  Triplet<T> out = in;
  auto apply = [&](Tensor<T>& t, bool is_flow) {
    t = detail::crop_plain(t, y0, x0, crop_size, crop_size);
    if (hflip) t = detail::flip_h(t, is_flow);
    if (vflip) t = detail::flip_v(t, is_flow);
    if (rot) t = detail::rot90_ccw(t, is_flow);
  };
  apply(out.frame0, false);
  apply(out.frame_t, false);
  apply(out.frame1, false);
  if (out.has_gt_flow) {
    apply(out.gt_flow01, true);
    apply(out.gt_flow10, true);
  }
  if (rev) out = reverse_time(std::move(out));
  return out;
}

}  // namespace ebme
