#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "volumetrack/projection.hpp"

using namespace volumetrack;

namespace {

OccupancyVolume person_sized() {
    GridSpec s;
    s.nx = 80;
    s.ny = 80;
    s.nz = 100;
    s.ground_z = 1;
    return OccupancyVolume(s);
}

OccupancyVolume thin_sized() {
    GridSpec s;
    s.nx = 41;
    s.ny = 41;
    s.nz = 100;
    s.ground_z = 1;
    return OccupancyVolume(s);
}

} // namespace

TEST_SUITE_BEGIN("projection");

TEST_CASE("top_down uses the 1-based height of the highest voxel") {
    auto v = person_sized();
    v.set(3, 4, 9);
    const auto ft = top_down(v);
    CHECK(ft.at(3, 4) == 10.f);
    CHECK(ft.at(0, 0) == 0.f);

    v.set(7, 7, 2);
    v.set(7, 7, 7);
    CHECK(top_down(v).at(7, 7) == 8.f);
}

TEST_CASE("column_sum counts occupied voxels per column") {
    auto v = person_sized();
    CHECK(column_sum(v).at(5, 5) == 0.f);
    for (int z = 0; z < 100; ++z) v.set(5, 5, z);
    CHECK(column_sum(v).at(5, 5) == 100.f);
}

TEST_CASE("bottom_up removes voxels at or below ground level") {
    auto v = person_sized();
    v.set(10, 10, 1); // exactly ground_z
    CHECK(bottom_up(v, 1).at(10, 10) == 0.f);

    v.set(12, 12, 5);
    v.set(12, 12, 90);
    CHECK(bottom_up(v, 1).at(12, 12) == 95.f);
}

TEST_CASE("projection maps equal the naive triple-loop oracles") {
    Rng rng(23);
    for (int it = 0; it < 20; ++it) {
        const auto v = oracles::random_volume(rng, 80, 80, 100, 0.05);
        CHECK(top_down(v) == oracles::naive_top_down(v));
        CHECK(column_sum(v) == oracles::naive_column_sum(v));
        CHECK(bottom_up(v, 1) == oracles::naive_bottom_up(v, 1));
    }
}

TEST_CASE("f_s never exceeds f_t") {
    Rng rng(29);
    for (int it = 0; it < 10; ++it) {
        const auto v = oracles::random_volume(rng, 60, 60, 100, 0.08);
        const auto ft = top_down(v);
        const auto fs = column_sum(v);
        for (std::size_t i = 0; i < ft.data.size(); ++i) REQUIRE(fs.data[i] <= ft.data[i]);
    }
}

TEST_CASE("maps of a disjoint-column union combine as max, sum, max") {
    Rng rng(31);
    auto a = person_sized();
    auto b = person_sized();
    for (int k = 0; k < 3000; ++k) {
        const int x = int(rng.below(80)), y = int(rng.below(80)), z = int(rng.below(100));
        if (x < 40)
            a.set(x, y, z);
        else
            b.set(x, y, z);
    }
    OccupancyVolume u = a;
    for (std::size_t i = 0; i < u.words.size(); ++i) u.words[i] |= b.words[i];

    const auto fta = top_down(a), ftb = top_down(b), ftu = top_down(u);
    const auto fsa = column_sum(a), fsb = column_sum(b), fsu = column_sum(u);
    const auto fba = bottom_up(a, 1), fbb = bottom_up(b, 1), fbu = bottom_up(u, 1);
    for (std::size_t i = 0; i < ftu.data.size(); ++i) {
        REQUIRE(ftu.data[i] == std::max(fta.data[i], ftb.data[i]));
        REQUIRE(fsu.data[i] == fsa.data[i] + fsb.data[i]);
        REQUIRE(fbu.data[i] == std::max(fba.data[i], fbb.data[i]));
    }
}

TEST_CASE("stack_features normalizes by N_z and clamps") {
    Map2f ft(4, 4), fs(4, 4), fb(4, 4);
    ft.at(1, 1) = 100.f;
    fs.at(2, 2) = 100.f;
    const auto img = stack_features(ft, fs, fb, 100);
    CHECK(img.at(1, 1, 0) == 1.0f);
    CHECK(img.at(2, 2, 1) == 1.0f);
    CHECK(img.at(0, 0, 0) == 0.0f);
    CHECK(img.at(0, 0, 2) == 0.0f);

    Map2f bad(3, 4);
    CHECK_THROWS_AS((void)stack_features(ft, fs, bad, 100), std::invalid_argument);
}

TEST_CASE("extract_patch copies interiors and zero-pads corners") {
    Map2f map(100, 100);
    for (int y = 0; y < 100; ++y)
        for (int x = 0; x < 100; ++x) map.at(x, y) = float(x * 1000 + y);

    SUBCASE("interior is a plain sub-array copy") {
        const auto p = extract_patch(map, {50, 50}, 21);
        for (int j = 0; j < 21; ++j)
            for (int i = 0; i < 21; ++i) REQUIRE(p.at(i, j) == map.at(40 + i, 40 + j));
    }
    SUBCASE("corner center zero-pads the out-of-map quadrant") {
        const auto p = extract_patch(map, {0, 0}, 80);
        for (int j = 0; j < 40; ++j)
            for (int i = 0; i < 40; ++i) REQUIRE(p.at(i, j) == 0.f);
        CHECK(p.at(40, 40) == map.at(0, 0));
    }
    SUBCASE("random centers match the per-pixel offset oracle") {
        Rng rng(37);
        for (int it = 0; it < 20; ++it) {
            const Eigen::Vector2i c{int(rng.below(140)) - 20, int(rng.below(140)) - 20};
            const int size = 1 + int(rng.below(60));
            const auto p = extract_patch(map, c, size);
            for (int j = 0; j < size; ++j)
                for (int i = 0; i < size; ++i)
                    REQUIRE(p.at(i, j) ==
                            map.sample_or_zero(c.x() + i - size / 2, c.y() + j - size / 2));
        }
    }
}

TEST_CASE("side view of a voxel on the near face is 1.0") {
    auto thin = thin_sized();
    thin.set(40, 20, 50);
    const auto views = side_views(thin);
    CHECK(views.view(ViewDirection::pos_x).at(20, 50, 0) == 1.0f);
    CHECK(views.view(ViewDirection::pos_x).at(20, 50, 2) == 1.0f);
    CHECK(views.view(ViewDirection::pos_x).at(20, 50, 1) == doctest::Approx(1.0f / 41));
    CHECK(views.view(ViewDirection::neg_x).at(20, 50, 0) == doctest::Approx(1.0f / 41));
}

TEST_CASE("side views of an empty thin volume are all zero") {
    const auto views = side_views(thin_sized());
    for (const auto& v : views.views)
        for (float f : v.data) REQUIRE(f == 0.f);
}

TEST_CASE("side views match the naive ray-walk oracle") {
    Rng rng(41);
    for (int it = 0; it < 10; ++it) {
        const auto thin = oracles::random_volume(rng, 41, 41, 100, 0.05);
        const auto got = side_views(thin);
        const auto want = oracles::naive_side_views(thin);
        for (int d = 0; d < 4; ++d) REQUIRE(got.views[d] == want.views[d]);
    }
}

TEST_CASE("side view of a mirrored volume swaps +x and -x") {
    Rng rng(43);
    const auto thin = oracles::random_volume(rng, 41, 41, 100, 0.05);
    const auto base = side_views(thin);
    const auto mirrored = side_views(oracles::mirror_x(thin));
    CHECK(base.view(ViewDirection::pos_x) == mirrored.view(ViewDirection::neg_x));
    CHECK(base.view(ViewDirection::neg_x) == mirrored.view(ViewDirection::pos_x));
}

TEST_CASE("rotating the thin volume 90 degrees permutes the four views") {
    Rng rng(47);
    const auto thin = oracles::random_volume(rng, 41, 41, 100, 0.05);
    const auto base = side_views(thin);
    const auto rot = side_views(oracles::rotate90_ccw(thin));

    auto flip_t = [](const Image3f& img) {
        Image3f out(img.width, img.height);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
        return out;
    };
    CHECK(rot.view(ViewDirection::pos_x) == base.view(ViewDirection::neg_y));
    CHECK(rot.view(ViewDirection::neg_x) == base.view(ViewDirection::pos_y));
    CHECK(rot.view(ViewDirection::pos_y) == flip_t(base.view(ViewDirection::pos_x)));
    CHECK(rot.view(ViewDirection::neg_y) == flip_t(base.view(ViewDirection::neg_x)));
}

TEST_CASE("direct point-to-map path matches voxelize plus projections") {
    Rng rng(53);
    GridSpec spec;
    spec.nx = 120;
    spec.ny = 90;
    spec.nz = 100;
    spec.ground_z = 1;
    PointFrame frame;
    for (int i = 0; i < 20000; ++i)
        frame.points.emplace_back(float(rng.uniform(-0.1, 2.6)), float(rng.uniform(-0.1, 2.0)),
                                  float(rng.uniform(-0.1, 2.1)));
    const auto direct = feature_maps_from_points(frame, spec);
    const auto via_volume = compute_feature_maps(voxelize(frame, spec));
    CHECK(direct.f_t == via_volume.f_t);
    CHECK(direct.f_s == via_volume.f_s);
    CHECK(direct.f_b == via_volume.f_b);
    CHECK(direct.stacked == via_volume.stacked);
}

TEST_CASE("patch of the room f_t equals f_t of the person crop") {
    Rng rng(59);
    const auto parent = oracles::random_volume(rng, 140, 140, 100, 0.02);
    const Eigen::Vector2i center{70, 35};
    const auto patch = extract_patch(top_down(parent), center, kPersonDimXY);
    const auto crop_ft = top_down(crop_person_volume(parent, center));
    CHECK(patch == crop_ft);
}

TEST_CASE("PGM dump writes a 16-bit binary file with the scale comment") {
    Map2f m(8, 4);
    m.at(3, 2) = 50.f;
    const auto path = (std::filesystem::temp_directory_path() / "vt_map.pgm").string();
    write_pgm16(path, m, 100.f);
    std::ifstream in(path, std::ios::binary);
    std::string magic, comment;
    std::getline(in, magic);
    std::getline(in, comment);
    CHECK(magic == "P5");
    CHECK(comment.find("scale=100") != std::string::npos);
    int w = 0, h = 0, maxval = 0;
    in >> w >> h >> maxval;
    CHECK(w == 8);
    CHECK(h == 4);
    CHECK(maxval == 65535);
    in.get(); // newline after maxval
    std::vector<unsigned char> payload(8 * 4 * 2);
    in.read(reinterpret_cast<char*>(payload.data()), std::streamsize(payload.size()));
    REQUIRE(bool(in));
    const std::size_t off = (2 * 8 + 3) * 2; // pixel (3,2), big-endian
    CHECK(payload[off] == 0x13);     // 5000 = 0x1388
    CHECK(payload[off + 1] == 0x88);
    std::filesystem::remove(path);
}

TEST_SUITE_END();
