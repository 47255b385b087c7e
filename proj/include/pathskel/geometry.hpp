// SPDX-License-Identifier: Apache-2.0
//
// pathskel - path-skeleton beam tracking simulator for mobile mmWave links
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef PATHSKEL_GEOMETRY_HPP
#define PATHSKEL_GEOMETRY_HPP

#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathskel
{

struct Vec2
{
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(b - a); }

// Wraps any angle in degrees into [0, 360).
double normalize_deg(double deg);

// Direction of (to - from), degrees counterclockwise from +x, in [0, 360).
double direction_deg(Vec2 from, Vec2 to);

// Axis-aligned rectangle, closed on all sides.
struct Rect
{
    Vec2 min;
    Vec2 max;

    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
    bool contains(Vec2 p) const { return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y; }
};

struct Material
{
    std::string name;
    double penetration_loss_db = 0.0; // per wall crossing
};

Material brick();  // 28.3 dB
Material glass();  // 3.9 dB

struct WallSegment
{
    Vec2 a;
    Vec2 b;
    Material material;

    double length() const { return distance(a, b); }
};

// Raised for maps whose walls overlap collinearly with a ray (no single crossing point).
class DegenerateGeometry : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class BuildingMap
{
  public:
    BuildingMap() = default;

    // Throws std::invalid_argument for zero-length walls, walls outside bounds,
    // negative or non-finite material losses, or an empty bounds rectangle.
    BuildingMap(Rect bounds, std::vector<WallSegment> segments);

    const Rect &bounds() const { return bounds_; }
    const std::vector<WallSegment> &segments() const { return segments_; }
    std::size_t size() const { return segments_.size(); }

    // Copy of the map with segment `index` removed.
    BuildingMap without(std::size_t index) const;

  private:
    Rect bounds_{};
    std::vector<WallSegment> segments_;
};

enum class PathKind
{
    LineOfSight,
    Reflected,
    Penetrating
};

const char *to_string(PathKind kind);

struct RayPath
{
    PathKind kind = PathKind::LineOfSight;
    int reflection_order = 0;    // number of bounces, > 0 only for Reflected
    std::vector<Vec2> vertices;  // Tx first, Rx last
    std::vector<std::size_t> walls; // reflecting wall indices, one per bounce
    double length_m = 0.0;
    double aod_deg = 0.0;        // leaving the Tx
    double aoa_deg = 0.0;        // pointing from the Rx back toward the incoming wave
    double penetration_loss_db = 0.0;
    double reflection_loss_db = 0.0;
    int wall_crossings = 0;

    double total_loss_db() const { return penetration_loss_db + reflection_loss_db; }
};

// Closed-segment intersection of p1-p2 with q1-q2. Touching endpoints count.
// Parallel or disjoint segments give nullopt; collinear segments sharing more
// than one point throw DegenerateGeometry.
std::optional<Vec2> segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2);

struct TraceOptions
{
    int max_reflections = 2;
    int max_wall_crossings = 1;
    double reflection_loss_db = 6.0; // per specular bounce
};

// Line-of-sight/penetrating direct path plus image-method specular reflections
// up to opts.max_reflections bounces, sorted by ascending total loss (then length).
std::vector<RayPath> trace_paths(const BuildingMap &map, Vec2 tx, Vec2 rx, const TraceOptions &opts = {});

// True iff the closed tx-rx segment touches no wall.
bool los_exists(const BuildingMap &map, Vec2 tx, Vec2 rx);

// Map text format:
//   bounds x0 y0 x1 y1
//   material <name> <loss_db>
//   x1 y1 x2 y2 <material_name>
// '#' starts a comment. Errors are reported as "<source>:<line>: <message>".
BuildingMap parse_map(std::istream &in, const std::string &source = "<map>");
BuildingMap load_map(const std::string &path);

} // namespace pathskel

#endif
