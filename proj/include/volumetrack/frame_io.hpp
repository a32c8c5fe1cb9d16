#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "volumetrack/volume.hpp"

namespace volumetrack {

// PC4D frame file, little-endian:
//   magic "PC4D", u8 version=1, u8 flags (bit0 = has RGB), u32 point count,
//   per point 3 x f32 (x, y, z meters) and, if flagged, 3 x u8 RGB.
// Non-finite points are rejected while parsing.

inline void write_pc4d(const std::string& path, const PointFrame& frame) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    const bool rgb = frame.has_colors();
    const char magic[4] = {'P', 'C', '4', 'D'};
    out.write(magic, 4);
    const std::uint8_t version = 1;
    const std::uint8_t flags = rgb ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&version), 1);
    out.write(reinterpret_cast<const char*>(&flags), 1);
    const std::uint32_t count = std::uint32_t(frame.points.size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (std::size_t i = 0; i < frame.points.size(); ++i) {
        float xyz[3] = {frame.points[i].x(), frame.points[i].y(), frame.points[i].z()};
        out.write(reinterpret_cast<const char*>(xyz), 12);
        if (rgb) out.write(reinterpret_cast<const char*>(frame.colors[i].data()), 3);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline PointFrame read_pc4d(std::istream& in, const std::string& name) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PC4D", 4) != 0)
        throw std::runtime_error("not a PC4D file: " + name);
    std::uint8_t version = 0, flags = 0;
    in.read(reinterpret_cast<char*>(&version), 1);
    in.read(reinterpret_cast<char*>(&flags), 1);
    if (!in || version != 1)
        throw std::runtime_error("unsupported PC4D version in " + name);
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    if (!in) throw std::runtime_error("truncated PC4D header: " + name);
    const bool rgb = flags & 1;
    PointFrame frame;
    frame.points.reserve(count);
    if (rgb) frame.colors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        float xyz[3];
        in.read(reinterpret_cast<char*>(xyz), 12);
        std::array<std::uint8_t, 3> color{};
        if (rgb) in.read(reinterpret_cast<char*>(color.data()), 3);
        if (!in) throw std::runtime_error("truncated PC4D payload: " + name);
        if (!std::isfinite(xyz[0]) || !std::isfinite(xyz[1]) || !std::isfinite(xyz[2]))
            continue;
        frame.points.emplace_back(xyz[0], xyz[1], xyz[2]);
        if (rgb) frame.colors.push_back(color);
    }
    return frame;
}

// ASCII PLY subset: float/double x, y, z vertex properties, other properties
// skipped token-wise.
inline PointFrame read_ply_ascii(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply")
        throw std::runtime_error("not a PLY file: " + name);
    std::size_t vertex_count = 0;
    int prop_index = 0;
    int ix = -1, iy = -1, iz = -1;
    bool in_vertex_element = false;
    bool format_ok = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "format") {
            std::string kind;
            ls >> kind;
            if (kind != "ascii") throw std::runtime_error("only ascii PLY supported: " + name);
            format_ok = true;
        } else if (tok == "element") {
            std::string what;
            std::size_t n = 0;
            ls >> what >> n;
            in_vertex_element = (what == "vertex");
            if (in_vertex_element) vertex_count = n;
        } else if (tok == "property" && in_vertex_element) {
            std::string type, pname;
            ls >> type >> pname;
            if (pname == "x") ix = prop_index;
            if (pname == "y") iy = prop_index;
            if (pname == "z") iz = prop_index;
            ++prop_index;
        } else if (tok == "end_header") {
            break;
        }
    }
    if (!format_ok || ix < 0 || iy < 0 || iz < 0)
        throw std::runtime_error("PLY missing float x/y/z vertex properties: " + name);
    PointFrame frame;
    frame.points.reserve(vertex_count);
    for (std::size_t i = 0; i < vertex_count; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error("truncated PLY payload: " + name);
        std::istringstream ls(line);
        double val = 0, x = 0, y = 0, z = 0;
        for (int p = 0; p < prop_index; ++p) {
            if (!(ls >> val)) throw std::runtime_error("malformed PLY vertex line: " + name);
            if (p == ix) x = val;
            if (p == iy) y = val;
            if (p == iz) z = val;
        }
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) continue;
        frame.points.emplace_back(float(x), float(y), float(z));
    }
    return frame;
}

// Dispatch on the magic bytes.
inline PointFrame read_point_frame(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    in.seekg(0);
    if (std::memcmp(magic, "PC4D", 4) == 0) return read_pc4d(in, path);
    if (std::memcmp(magic, "ply", 3) == 0) return read_ply_ascii(in, path);
    throw std::runtime_error("unrecognized point frame format: " + path);
}

} // namespace volumetrack
