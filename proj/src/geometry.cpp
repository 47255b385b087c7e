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

#include "pathskel/geometry.hpp"
#include "pathskel/text_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numbers>
#include <tuple>

namespace pathskel
{

namespace
{

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kDuplicateTol = 1e-6; // meters

// Mirror image of p across the infinite line through the wall.
Vec2 mirror(Vec2 p, const WallSegment &w)
{
    Vec2 d = w.b - w.a;
    double t = dot(p - w.a, d) / dot(d, d);
    Vec2 foot = w.a + t * d;
    return 2.0 * foot - p;
}

struct Crossings
{
    int count = 0;
    double loss_db = 0.0;
};

// Walls touched by the closed segment p-q, skipping the (at most two) walls the
// endpoints sit on as reflection points.
Crossings count_crossings(const BuildingMap &map, Vec2 p, Vec2 q, std::ptrdiff_t skip_a, std::ptrdiff_t skip_b)
{
    Crossings c;
    const auto &walls = map.segments();
    for (std::size_t i = 0; i < walls.size(); ++i)
    {
        auto idx = static_cast<std::ptrdiff_t>(i);
        if (idx == skip_a || idx == skip_b)
            continue;
        if (segments_intersect(p, q, walls[i].a, walls[i].b))
        {
            ++c.count;
            c.loss_db += walls[i].material.penetration_loss_db;
        }
    }
    return c;
}

bool same_vertices(const RayPath &a, const RayPath &b)
{
    if (a.vertices.size() != b.vertices.size())
        return false;
    for (std::size_t i = 0; i < a.vertices.size(); ++i)
        if (distance(a.vertices[i], b.vertices[i]) > kDuplicateTol)
            return false;
    return true;
}

void finish_path(RayPath &path)
{
    path.length_m = 0.0;
    for (std::size_t i = 1; i < path.vertices.size(); ++i)
        path.length_m += distance(path.vertices[i - 1], path.vertices[i]);
    path.aod_deg = direction_deg(path.vertices[0], path.vertices[1]);
    const auto n = path.vertices.size();
    path.aoa_deg = direction_deg(path.vertices[n - 1], path.vertices[n - 2]);
}

// Reflection path for a fixed wall sequence, or nullopt when the specular
// construction misses one of the wall segments.
std::optional<RayPath> reflect_through(const BuildingMap &map, Vec2 tx, Vec2 rx,
                                       const std::vector<std::size_t> &seq, const TraceOptions &opts)
{
    const auto &walls = map.segments();
    const std::size_t k = seq.size();

    std::vector<Vec2> images(k + 1);
    images[0] = tx;
    for (std::size_t j = 0; j < k; ++j)
        images[j + 1] = mirror(images[j], walls[seq[j]]);

    std::vector<Vec2> bounce(k);
    Vec2 target = rx;
    for (std::size_t jj = k; jj-- > 0;)
    {
        const auto &w = walls[seq[jj]];
        Vec2 r = target - images[jj + 1];
        Vec2 s = w.b - w.a;
        double denom = cross(r, s);
        if (std::abs(denom) <= 1e-12 * norm(r) * norm(s))
            return std::nullopt;
        Vec2 qp = w.a - images[jj + 1];
        double t = cross(qp, s) / denom;
        double u = cross(qp, r) / denom;
        constexpr double eps = 1e-12;
        if (t <= eps || t >= 1.0 - eps || u < 0.0 || u > 1.0)
            return std::nullopt;
        bounce[jj] = images[jj + 1] + t * r;
        target = bounce[jj];
    }

    RayPath path;
    path.kind = PathKind::Reflected;
    path.reflection_order = static_cast<int>(k);
    path.walls = seq;
    path.vertices.reserve(k + 2);
    path.vertices.push_back(tx);
    for (auto p : bounce)
        path.vertices.push_back(p);
    path.vertices.push_back(rx);

    for (std::size_t i = 1; i < path.vertices.size(); ++i)
        if (distance(path.vertices[i - 1], path.vertices[i]) <= kDuplicateTol)
            return std::nullopt;

    for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i)
    {
        std::ptrdiff_t skip_a = i == 0 ? -1 : static_cast<std::ptrdiff_t>(seq[i - 1]);
        std::ptrdiff_t skip_b = i + 1 == path.vertices.size() - 1 ? -1 : static_cast<std::ptrdiff_t>(seq[i]);
        auto c = count_crossings(map, path.vertices[i], path.vertices[i + 1], skip_a, skip_b);
        path.wall_crossings += c.count;
        path.penetration_loss_db += c.loss_db;
    }
    if (path.wall_crossings > opts.max_wall_crossings)
        return std::nullopt;

    path.reflection_loss_db = opts.reflection_loss_db * static_cast<double>(k);
    finish_path(path);
    return path;
}

void enumerate_sequences(std::size_t n_walls, std::size_t order, std::vector<std::size_t> &seq,
                         std::vector<std::vector<std::size_t>> &out)
{
    if (seq.size() == order)
    {
        out.push_back(seq);
        return;
    }
    for (std::size_t w = 0; w < n_walls; ++w)
    {
        if (!seq.empty() && seq.back() == w)
            continue;
        seq.push_back(w);
        enumerate_sequences(n_walls, order, seq, out);
        seq.pop_back();
    }
}

} // namespace

double normalize_deg(double deg)
{
    double r = std::fmod(deg, 360.0);
    if (r < 0.0)
        r += 360.0;
    if (r >= 360.0)
        r -= 360.0;
    return r;
}

double direction_deg(Vec2 from, Vec2 to)
{
    Vec2 d = to - from;
    return normalize_deg(std::atan2(d.y, d.x) * kRadToDeg);
}

Material brick() { return {"brick", 28.3}; }
Material glass() { return {"glass", 3.9}; }

BuildingMap::BuildingMap(Rect bounds, std::vector<WallSegment> segments)
    : bounds_(bounds), segments_(std::move(segments))
{
    if (!(bounds_.width() > 0.0) || !(bounds_.height() > 0.0))
        throw std::invalid_argument("Map bounds must have positive width and height.");
    for (const auto &w : segments_)
    {
        if (!(w.length() > 0.0))
            throw std::invalid_argument("Wall segment must have positive length.");
        if (!bounds_.contains(w.a) || !bounds_.contains(w.b))
            throw std::invalid_argument("Wall segment lies outside the map bounds.");
        if (!std::isfinite(w.material.penetration_loss_db) || w.material.penetration_loss_db < 0.0)
            throw std::invalid_argument("Material '" + w.material.name + "' has an invalid penetration loss.");
    }
}

BuildingMap BuildingMap::without(std::size_t index) const
{
    auto segs = segments_;
    segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(index));
    return BuildingMap(bounds_, std::move(segs));
}

const char *to_string(PathKind kind)
{
    switch (kind)
    {
    case PathKind::LineOfSight:
        return "LineOfSight";
    case PathKind::Reflected:
        return "Reflected";
    case PathKind::Penetrating:
        return "Penetrating";
    }
    return "?";
}

std::optional<Vec2> segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2)
{
    Vec2 r = p2 - p1;
    Vec2 s = q2 - q1;
    Vec2 qp = q1 - p1;
    double denom = cross(r, s);
    double scale = norm(r) * norm(s);

    if (std::abs(denom) <= 1e-14 * scale)
    {
        // Parallel. Only collinear segments can still touch.
        if (std::abs(cross(qp, r)) > 1e-12 * norm(r) * std::max(norm(qp), 1.0))
            return std::nullopt;
        double rr = dot(r, r);
        double t0 = dot(qp, r) / rr;
        double t1 = dot(q2 - p1, r) / rr;
        if (t0 > t1)
            std::swap(t0, t1);
        double lo = std::max(t0, 0.0);
        double hi = std::min(t1, 1.0);
        if (lo > hi)
            return std::nullopt;
        if (hi - lo > 1e-12)
            throw DegenerateGeometry("Collinear overlapping segments have no single crossing point.");
        return p1 + lo * r;
    }

    double t = cross(qp, s) / denom;
    double u = cross(qp, r) / denom;
    if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0)
        return std::nullopt;
    return p1 + t * r;
}

bool los_exists(const BuildingMap &map, Vec2 tx, Vec2 rx)
{
    for (const auto &w : map.segments())
    {
        try
        {
            if (segments_intersect(tx, rx, w.a, w.b))
                return false;
        }
        catch (const DegenerateGeometry &)
        {
            return false;
        }
    }
    return true;
}

std::vector<RayPath> trace_paths(const BuildingMap &map, Vec2 tx, Vec2 rx, const TraceOptions &opts)
{
    if (tx == rx)
        throw std::invalid_argument("Tx and Rx locations must differ.");
    if (!map.bounds().contains(tx) || !map.bounds().contains(rx))
        throw std::invalid_argument("Tx and Rx must lie inside the map bounds.");
    if (opts.max_reflections < 0 || opts.max_wall_crossings < 0)
        throw std::invalid_argument("Reflection order and wall-crossing budget cannot be negative.");

    std::vector<RayPath> paths;

    {
        auto c = count_crossings(map, tx, rx, -1, -1);
        if (c.count <= opts.max_wall_crossings)
        {
            RayPath direct;
            direct.kind = c.count == 0 ? PathKind::LineOfSight : PathKind::Penetrating;
            direct.vertices = {tx, rx};
            direct.wall_crossings = c.count;
            direct.penetration_loss_db = c.loss_db;
            finish_path(direct);
            paths.push_back(std::move(direct));
        }
    }

    std::vector<std::size_t> seq;
    for (int order = 1; order <= opts.max_reflections; ++order)
    {
        std::vector<std::vector<std::size_t>> sequences;
        enumerate_sequences(map.size(), static_cast<std::size_t>(order), seq, sequences);
        for (const auto &s : sequences)
        {
            auto p = reflect_through(map, tx, rx, s, opts);
            if (!p)
                continue;
            bool dup = std::any_of(paths.begin(), paths.end(), [&](const RayPath &q) { return same_vertices(q, *p); });
            if (!dup)
                paths.push_back(std::move(*p));
        }
    }

    std::sort(paths.begin(), paths.end(), [](const RayPath &a, const RayPath &b) {
        auto key = [](const RayPath &p) {
            return std::make_tuple(p.total_loss_db(), p.length_m, p.reflection_order, p.wall_crossings);
        };
        if (key(a) != key(b))
            return key(a) < key(b);
        for (std::size_t i = 0; i < a.vertices.size(); ++i)
        {
            if (a.vertices[i].x != b.vertices[i].x)
                return a.vertices[i].x < b.vertices[i].x;
            if (a.vertices[i].y != b.vertices[i].y)
                return a.vertices[i].y < b.vertices[i].y;
        }
        return false;
    });
    return paths;
}

BuildingMap parse_map(std::istream &in, const std::string &source)
{
    std::map<std::string, Material> materials{{"brick", brick()}, {"glass", glass()}};
    std::optional<Rect> bounds;
    std::vector<WallSegment> segments;
    std::vector<std::size_t> segment_lines;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw))
    {
        ++line_no;
        auto line = strip_comment(raw);
        if (line.empty())
            continue;
        auto tok = split_whitespace(line);

        if (tok[0] == "material")
        {
            double loss = 0.0;
            if (tok.size() != 3 || !parse_double(tok[2], loss))
                throw ParseError(source, line_no, "expected 'material <name> <loss_db>'");
            if (loss < 0.0)
                throw ParseError(source, line_no, "penetration loss must be non-negative");
            materials[tok[1]] = Material{tok[1], loss};
            continue;
        }
        if (tok[0] == "bounds")
        {
            double v[4];
            if (tok.size() != 5)
                throw ParseError(source, line_no, "expected 'bounds x0 y0 x1 y1'");
            for (int i = 0; i < 4; ++i)
                if (!parse_double(tok[static_cast<std::size_t>(i) + 1], v[i]))
                    throw ParseError(source, line_no, "invalid number '" + tok[static_cast<std::size_t>(i) + 1] + "'");
            if (!(v[2] > v[0]) || !(v[3] > v[1]))
                throw ParseError(source, line_no, "bounds must have positive width and height");
            bounds = Rect{{v[0], v[1]}, {v[2], v[3]}};
            continue;
        }
        if (tok.size() != 5)
            throw ParseError(source, line_no, "expected 'x1 y1 x2 y2 material'");
        double v[4];
        for (int i = 0; i < 4; ++i)
            if (!parse_double(tok[static_cast<std::size_t>(i)], v[i]))
                throw ParseError(source, line_no, "invalid number '" + tok[static_cast<std::size_t>(i)] + "'");
        auto mat = materials.find(tok[4]);
        if (mat == materials.end())
            throw ParseError(source, line_no, "unknown material '" + tok[4] + "'");
        WallSegment w{{v[0], v[1]}, {v[2], v[3]}, mat->second};
        if (!(w.length() > 0.0))
            throw ParseError(source, line_no, "wall segment has zero length");
        segments.push_back(w);
        segment_lines.push_back(line_no);
    }

    if (!bounds)
        throw ParseError(source, line_no, "missing 'bounds' line");
    for (std::size_t i = 0; i < segments.size(); ++i)
        if (!bounds->contains(segments[i].a) || !bounds->contains(segments[i].b))
            throw ParseError(source, segment_lines[i], "wall segment lies outside the map bounds");
    return BuildingMap(*bounds, std::move(segments));
}

BuildingMap load_map(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("Cannot open map file '" + path + "'.");
    return parse_map(in, path);
}

} // namespace pathskel
