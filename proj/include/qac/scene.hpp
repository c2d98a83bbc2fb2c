#ifndef QAC_SCENE_HPP_
#define QAC_SCENE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qac/errors.hpp"

namespace qac {

inline constexpr int kNumObjects = 5;
inline constexpr int kNumDirections = 8;
inline constexpr int kNumActions = kNumObjects * kNumDirections;
inline constexpr int kStateDim = 2 * kNumObjects;
inline constexpr int kImageSize = 64;

// Canonical order; the enum value doubles as the object's slot in a Scene.
enum class Color : std::uint8_t { kCyan, kPurple, kGreen, kBlue, kRed };
enum class Material : std::uint8_t { kRubber, kMetal };
enum class Direction : std::uint8_t { kE, kNE, kN, kNW, kW, kSW, kS, kSE };

inline constexpr std::array<std::string_view, kNumObjects> kColorNames = {
    "cyan", "purple", "green", "blue", "red"};
inline constexpr std::array<std::string_view, 2> kMaterialNames = {"rubber",
                                                                   "metal"};
inline constexpr std::array<std::string_view, kNumDirections> kDirectionNames =
    {"E", "NE", "N", "NW", "W", "SW", "S", "SE"};

inline std::string_view to_string(Color c) {
  return kColorNames[static_cast<int>(c)];
}
inline std::string_view to_string(Material m) {
  return kMaterialNames[static_cast<int>(m)];
}
inline std::string_view to_string(Direction d) {
  return kDirectionNames[static_cast<int>(d)];
}

inline std::optional<Color> color_from_string(std::string_view s) {
  for (int i = 0; i < kNumObjects; ++i)
    if (kColorNames[i] == s) return static_cast<Color>(i);
  return std::nullopt;
}

// "matte" and "metallic" are accepted as synonyms when reading text.
inline std::optional<Material> material_from_string(std::string_view s) {
  if (s == "rubber" || s == "matte") return Material::kRubber;
  if (s == "metal" || s == "metallic") return Material::kMetal;
  return std::nullopt;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct ObjectState {
  Color color = Color::kCyan;
  Material material = Material::kRubber;
  Vec2 position;

  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

struct Scene {
  std::array<ObjectState, kNumObjects> objects;
  int step_count = 0;

  const ObjectState& object(Color c) const {
    return objects[static_cast<int>(c)];
  }
  ObjectState& object(Color c) { return objects[static_cast<int>(c)]; }

  friend bool operator==(const Scene&, const Scene&) = default;
};

// Geometry and task constants of the pushing arena. The arena is
// [-half_extent, half_extent]^2 and object centers stay at least one radius
// inside it.
struct EnvConfig {
  double half_extent = 1.0;
  double radius = 0.1;
  double push_distance = 0.15;
  double vertical_tolerance = 0.15;
  double relation_margin = 0.0;
  int max_steps = 100;
  int max_placement_attempts = 10000;

  double bound() const { return half_extent - radius; }
};

inline void validate(const EnvConfig& config) {
  if (!(config.radius > 0.0) || !(config.half_extent > config.radius))
    throw ConfigError("arena must be larger than one object radius");
  if (!(config.push_distance > 0.0))
    throw ConfigError("push_distance must be positive");
  if (!(config.vertical_tolerance >= 0.0))
    throw ConfigError("vertical_tolerance must be non-negative");
  if (!(config.relation_margin >= 0.0))
    throw ConfigError("relation_margin must be non-negative");
  if (config.max_steps <= 0) throw ConfigError("max_steps must be positive");
}

// A scene whose objects all carry the default material, placed at the given
// positions in canonical color order.
inline Scene make_scene(const std::array<Vec2, kNumObjects>& positions,
                        Material material = Material::kRubber) {
  Scene scene;
  for (int i = 0; i < kNumObjects; ++i) {
    scene.objects[i].color = static_cast<Color>(i);
    scene.objects[i].material = material;
    scene.objects[i].position = positions[i];
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Actions

struct Action {
  int object_index = 0;
  Direction direction = Direction::kE;

  friend bool operator==(const Action&, const Action&) = default;
};

inline Action decode_action(int index) {
  if (index < 0 || index >= kNumActions)
    throw InvalidActionError("action index " + std::to_string(index) +
                             " outside [0, 40)");
  return Action{index / kNumDirections,
                static_cast<Direction>(index % kNumDirections)};
}

inline int encode_action(const Action& action) {
  return action.object_index * kNumDirections +
         static_cast<int>(action.direction);
}

inline Vec2 unit_vector(Direction d) {
  constexpr double kDiag = 0.70710678118654752440;
  switch (d) {
    case Direction::kE: return {1.0, 0.0};
    case Direction::kNE: return {kDiag, kDiag};
    case Direction::kN: return {0.0, 1.0};
    case Direction::kNW: return {-kDiag, kDiag};
    case Direction::kW: return {-1.0, 0.0};
    case Direction::kSW: return {-kDiag, -kDiag};
    case Direction::kS: return {0.0, -1.0};
    case Direction::kSE: return {kDiag, -kDiag};
  }
  return {0.0, 0.0};
}

// ---------------------------------------------------------------------------
// Kinematics

namespace detail {

inline double clamp_coord(double v, double bound) {
  return std::clamp(v, -bound, bound);
}

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Moves `pushed` by `distance` along `dir` and displaces blockers
// transitively along the same direction. Returns the candidate positions;
// they may still overlap if a wall stopped part of the chain.
inline std::array<Vec2, kNumObjects> push_chain(
    const std::array<Vec2, kNumObjects>& start, int pushed, Vec2 dir,
    double distance, const EnvConfig& config) {
  const double contact = 2.0 * config.radius;
  const double bound = config.bound();
  std::array<Vec2, kNumObjects> pos = start;
  std::array<bool, kNumObjects> moved{};

  pos[pushed].x = clamp_coord(pos[pushed].x + dir.x * distance, bound);
  pos[pushed].y = clamp_coord(pos[pushed].y + dir.y * distance, bound);
  moved[pushed] = true;

  std::array<int, kNumObjects> queue{};
  int head = 0;
  int tail = 0;
  queue[tail++] = pushed;
  while (head < tail) {
    const int mover = queue[head++];
    for (int other = 0; other < kNumObjects; ++other) {
      if (moved[other]) continue;
      const double wx = pos[other].x - pos[mover].x;
      const double wy = pos[other].y - pos[mover].y;
      const double w2 = wx * wx + wy * wy;
      if (w2 >= contact * contact) continue;
      // Smallest s >= 0 with |w + s*dir| = contact.
      const double wd = wx * dir.x + wy * dir.y;
      const double s = -wd + std::sqrt(wd * wd - w2 + contact * contact);
      pos[other].x = clamp_coord(pos[other].x + dir.x * s, bound);
      pos[other].y = clamp_coord(pos[other].y + dir.y * s, bound);
      moved[other] = true;
      queue[tail++] = other;
    }
  }
  return pos;
}

inline bool separated(const std::array<Vec2, kNumObjects>& pos,
                      double min_distance) {
  for (int i = 0; i < kNumObjects; ++i)
    for (int j = i + 1; j < kNumObjects; ++j)
      if (distance(pos[i], pos[j]) < min_distance) return false;
  return true;
}

}  // namespace detail

// Pairwise separation and arena bounds, with a small slack for rounding.
inline bool is_valid(const Scene& scene, const EnvConfig& config,
                     double tolerance = 1e-9) {
  std::array<Vec2, kNumObjects> pos;
  for (int i = 0; i < kNumObjects; ++i) {
    pos[i] = scene.objects[i].position;
    if (scene.objects[i].color != static_cast<Color>(i)) return false;
    if (std::abs(pos[i].x) > config.half_extent ||
        std::abs(pos[i].y) > config.half_extent)
      return false;
  }
  return detail::separated(pos, 2.0 * config.radius - tolerance);
}

// Pushes one object. Blockers are displaced along the push direction by
// exactly their overlap. If a wall would leave the chain interpenetrating,
// the push is shortened to the longest travel (found by bisection) that
// keeps every pair separated.
inline Scene step(const Scene& scene, const Action& action,
                  const EnvConfig& config) {
  if (action.object_index < 0 || action.object_index >= kNumObjects)
    throw InvalidActionError("object index out of range");
  std::array<Vec2, kNumObjects> start;
  for (int i = 0; i < kNumObjects; ++i) start[i] = scene.objects[i].position;
  const Vec2 dir = unit_vector(action.direction);
  const double min_sep = 2.0 * config.radius - 1e-12;

  auto result = detail::push_chain(start, action.object_index, dir,
                                   config.push_distance, config);
  if (!detail::separated(result, min_sep)) {
    double lo = 0.0;
    double hi = config.push_distance;
    result = start;
    for (int iter = 0; iter < 48; ++iter) {
      const double mid = 0.5 * (lo + hi);
      auto candidate =
          detail::push_chain(start, action.object_index, dir, mid, config);
      if (detail::separated(candidate, min_sep)) {
        lo = mid;
        result = candidate;
      } else {
        hi = mid;
      }
    }
  }

  Scene next = scene;
  for (int i = 0; i < kNumObjects; ++i) next.objects[i].position = result[i];
  ++next.step_count;
  return next;
}

// ---------------------------------------------------------------------------
// Observations

enum class ObservationMode : std::uint8_t { kStateVector, kImage };

struct Observation {
  ObservationMode mode = ObservationMode::kStateVector;
  std::vector<double> state_vector;  // kStateDim entries
  std::vector<std::uint8_t> image;   // 64 x 64 x 3, row-major, RGB
};

inline std::array<std::uint8_t, 3> color_rgb(Color c) {
  switch (c) {
    case Color::kCyan: return {0, 255, 255};
    case Color::kPurple: return {128, 0, 128};
    case Color::kGreen: return {0, 160, 0};
    case Color::kBlue: return {0, 0, 255};
    case Color::kRed: return {255, 0, 0};
  }
  return {0, 0, 0};
}

inline std::vector<double> state_vector(const Scene& scene) {
  std::vector<double> v(kStateDim);
  for (int i = 0; i < kNumObjects; ++i) {
    v[2 * i] = scene.objects[i].position.x;
    v[2 * i + 1] = scene.objects[i].position.y;
  }
  return v;
}

// Pixel (row, col) covering arena point (x, y); +y points up the image.
inline std::pair<int, int> project_to_pixel(Vec2 p, double half_extent) {
  const double scale = kImageSize / (2.0 * half_extent);
  int col = static_cast<int>(std::floor((p.x + half_extent) * scale));
  int row = static_cast<int>(std::floor((half_extent - p.y) * scale));
  col = std::clamp(col, 0, kImageSize - 1);
  row = std::clamp(row, 0, kImageSize - 1);
  return {row, col};
}

// Filled discs in canonical order over a white background.
inline std::vector<std::uint8_t> rasterize(const Scene& scene,
                                           const EnvConfig& config) {
  std::vector<std::uint8_t> img(kImageSize * kImageSize * 3, 255);
  const double scale = kImageSize / (2.0 * config.half_extent);
  const double r_px = config.radius * scale;
  for (const auto& obj : scene.objects) {
    const double cx = (obj.position.x + config.half_extent) * scale;
    const double cy = (config.half_extent - obj.position.y) * scale;
    const auto rgb = color_rgb(obj.color);
    const int r0 = std::max(0, static_cast<int>(std::floor(cy - r_px)));
    const int r1 = std::min(kImageSize - 1, static_cast<int>(cy + r_px));
    const int c0 = std::max(0, static_cast<int>(std::floor(cx - r_px)));
    const int c1 = std::min(kImageSize - 1, static_cast<int>(cx + r_px));
    for (int row = r0; row <= r1; ++row) {
      for (int col = c0; col <= c1; ++col) {
        const double dx = col + 0.5 - cx;
        const double dy = row + 0.5 - cy;
        if (dx * dx + dy * dy > r_px * r_px) continue;
        std::uint8_t* px = &img[(row * kImageSize + col) * 3];
        px[0] = rgb[0];
        px[1] = rgb[1];
        px[2] = rgb[2];
      }
    }
  }
  return img;
}

inline Observation observe(const Scene& scene, ObservationMode mode,
                           const EnvConfig& config = {}) {
  Observation obs;
  obs.mode = mode;
  obs.state_vector = state_vector(scene);
  if (mode == ObservationMode::kImage) obs.image = rasterize(scene, config);
  return obs;
}

// Image scaled to [0, 1], flattened; the network input for image mode.
inline std::vector<double> image_features(const Scene& scene,
                                          const EnvConfig& config) {
  const auto img = rasterize(scene, config);
  std::vector<double> v(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) v[i] = img[i] / 255.0;
  return v;
}

// ---------------------------------------------------------------------------
// Text record: one line per object, "color material x y".

inline std::string serialize_scene(const Scene& scene) {
  std::string out;
  char line[96];
  for (const auto& obj : scene.objects) {
    std::snprintf(line, sizeof(line), "%s %s %.6f %.6f\n",
                  std::string(to_string(obj.color)).c_str(),
                  std::string(to_string(obj.material)).c_str(),
                  obj.position.x, obj.position.y);
    out += line;
  }
  return out;
}

inline Scene parse_scene(const std::string& text) {
  Scene scene;
  std::array<bool, kNumObjects> seen{};
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  int count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string color_s, material_s;
    double x = 0.0, y = 0.0;
    if (!(fields >> color_s >> material_s >> x >> y))
      throw ParseError("malformed scene line " + std::to_string(line_no), 0);
    const auto color = color_from_string(color_s);
    const auto material = material_from_string(material_s);
    if (!color) throw LexicalError("unknown color '" + color_s + "'", 0);
    if (!material)
      throw LexicalError("unknown material '" + material_s + "'", 0);
    const int slot = static_cast<int>(*color);
    if (seen[slot])
      throw ParseError("duplicate color '" + color_s + "'", 0);
    seen[slot] = true;
    scene.objects[slot] = ObjectState{*color, *material, {x, y}};
    ++count;
  }
  if (count != kNumObjects)
    throw ParseError("scene record needs exactly 5 objects", 0);
  return scene;
}

}  // namespace qac

#endif  // QAC_SCENE_HPP_
