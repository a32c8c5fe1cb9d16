#pragma once

#include <cstdint>
#include <cstdio>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace volumetrack {

// Dense 2D grid, (x, y) indexed, row-major in y.
template <typename T>
struct Grid2 {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Grid2() = default;
    Grid2(int w, int h, T fill = T{}) : width(w), height(h), data(std::size_t(w) * h, fill) {}

    T& at(int x, int y) { return data[std::size_t(y) * width + x]; }
    const T& at(int x, int y) const { return data[std::size_t(y) * width + x]; }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }

    // zero outside the grid
    T sample_or_zero(int x, int y) const { return in_bounds(x, y) ? at(x, y) : T{}; }

    bool operator==(const Grid2&) const = default;
};

using Map2f = Grid2<float>;
using Map2d = Grid2<double>;
using LabelMap = Grid2<std::uint8_t>;

// 3-channel float image, interleaved, (x, y, c) indexed.
struct Image3f {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    Image3f() = default;
    Image3f(int w, int h, float fill = 0.f)
        : width(w), height(h), data(std::size_t(w) * h * 3, fill) {}

    float& at(int x, int y, int c) { return data[(std::size_t(y) * width + x) * 3 + c]; }
    const float& at(int x, int y, int c) const {
        return data[(std::size_t(y) * width + x) * 3 + c];
    }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }

    bool operator==(const Image3f&) const = default;
};

// 16-bit binary PGM (big-endian sample order per the Netpbm spec). The
// scaling factor applied to the float map is recorded in a header comment so
// the dump is invertible. scale == 0 picks 65535 / max(map).
inline void write_pgm16(const std::string& path, const Map2f& map, float scale = 0.f) {
    float chosen = scale;
    if (chosen <= 0.f) {
        float mx = 0.f;
        for (float v : map.data) mx = std::max(mx, v);
        chosen = mx > 0.f ? 65535.0f / mx : 1.0f;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char header[128];
    std::snprintf(header, sizeof(header), "P5\n# scale=%.9g\n%d %d\n65535\n",
                  chosen, map.width, map.height);
    out << header;
    std::vector<unsigned char> row(std::size_t(map.width) * 2);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            float v = map.at(x, y) * chosen;
            std::uint16_t q = std::uint16_t(std::clamp(std::lround(v), 0L, 65535L));
            row[std::size_t(x) * 2] = (unsigned char)(q >> 8);
            row[std::size_t(x) * 2 + 1] = (unsigned char)(q & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace volumetrack
