#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "rwae/dataset.hpp"
#include "rwae/errors.hpp"

using namespace rwae;
namespace fs = std::filesystem;

namespace {

GeneratorConfig small_config() {
    GeneratorConfig cfg;
    cfg.image_size = 16;
    cfg.timesteps = 8;
    cfg.count = 60;
    cfg.seed = 42;
    return cfg;
}

// Pixel-weighted centroid of one frame.
std::pair<double, double> centroid(const SequenceDataset& d, std::int64_t seq, std::int64_t t) {
    const float* p = d.frame_ptr(seq, t);
    double sx = 0, sy = 0, mass = 0;
    for (std::int64_t y = 0; y < d.dims.height; ++y) {
        for (std::int64_t x = 0; x < d.dims.width; ++x) {
            const double v = p[y * d.dims.width + x];
            sx += v * double(x);
            sy += v * double(y);
            mass += v;
        }
    }
    REQUIRE(mass > 0.0);
    return {sx / mass, sy / mass};
}

// Extracts the tight bounding-box content of the nonzero pixels.
std::vector<float> mask_signature(const SequenceDataset& d, std::int64_t seq, std::int64_t t) {
    const float* p = d.frame_ptr(seq, t);
    std::int64_t x0 = d.dims.width, x1 = -1, y0 = d.dims.height, y1 = -1;
    for (std::int64_t y = 0; y < d.dims.height; ++y) {
        for (std::int64_t x = 0; x < d.dims.width; ++x) {
            if (p[y * d.dims.width + x] > 0) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
        }
    }
    REQUIRE(x1 >= 0);
    std::vector<float> sig;
    sig.push_back(float(x1 - x0 + 1));
    sig.push_back(float(y1 - y0 + 1));
    for (std::int64_t y = y0; y <= y1; ++y) {
        for (std::int64_t x = x0; x <= x1; ++x) sig.push_back(p[y * d.dims.width + x]);
    }
    return sig;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = (fs::temp_directory_path() / name).string();
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("generator determinism: same seed, bitwise-identical dataset") {
    SequenceDataset a = generate_dataset(small_config());
    SequenceDataset b = generate_dataset(small_config());
    CHECK(a.frames == b.frames);
    CHECK(a.shape_labels == b.shape_labels);
    CHECK(a.motion_labels == b.motion_labels);

    GeneratorConfig other = small_config();
    other.seed = 43;
    CHECK(generate_dataset(other).frames != a.frames);
}

TEST_CASE("generator validation") {
    GeneratorConfig cfg = small_config();
    cfg.sizes = {20};
    CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.speed_min = 0;
    cfg.speed_max = 0;
    CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.count = 0;
    CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.motions.clear();
    CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
}

TEST_CASE("all pixels lie in [0,1] and labels index the vocabularies") {
    SequenceDataset d = generate_dataset(small_config());
    for (float v : d.frames) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    for (auto v : d.shape_labels) CHECK(v < std::int32_t(d.shape_vocab.size()));
    for (auto v : d.motion_labels) CHECK(v < std::int32_t(d.motion_vocab.size()));
}

TEST_CASE("static factor constancy: every frame is a pure translation of frame 1") {
    GeneratorConfig cfg = small_config();
    cfg.count = 40;
    cfg.motions = {MotionType::Line, MotionType::Zigzag, MotionType::Diagonal,
                   MotionType::Bounce};
    SequenceDataset d = generate_dataset(cfg);
    for (std::int64_t s = 0; s < d.dims.count; ++s) {
        auto first = mask_signature(d, s, 0);
        for (std::int64_t t = 1; t < d.dims.timesteps; ++t) {
            CHECK(mask_signature(d, s, t) == first);
        }
    }
}

TEST_CASE("straight-line motion keeps centroids collinear within a pixel") {
    GeneratorConfig cfg = small_config();
    cfg.count = 50;
    cfg.motions = {MotionType::Line};
    SequenceDataset d = generate_dataset(cfg);
    for (std::int64_t s = 0; s < d.dims.count; ++s) {
        std::vector<std::pair<double, double>> pts;
        for (std::int64_t t = 0; t < d.dims.timesteps; ++t) pts.push_back(centroid(d, s, t));
        // Axis-aligned straight motion: either all x or all y agree.
        double dx = 0, dy = 0;
        for (auto& [x, y] : pts) {
            dx = std::max(dx, std::abs(x - pts[0].first));
            dy = std::max(dy, std::abs(y - pts[0].second));
        }
        CHECK(std::min(dx, dy) <= 1.0);
        CHECK(std::max(dx, dy) > 0.0); // it does move
    }
}

TEST_CASE("bounce motion: constant centroid displacement between wall contacts") {
    GeneratorConfig cfg = small_config();
    cfg.count = 30;
    cfg.timesteps = 12;
    cfg.motions = {MotionType::Bounce};
    SequenceDataset d = generate_dataset(cfg);

    auto bbox = [&](std::int64_t s, std::int64_t t) {
        const float* p = d.frame_ptr(s, t);
        std::int64_t x0 = d.dims.width, x1 = -1, y0 = d.dims.height, y1 = -1;
        for (std::int64_t y = 0; y < d.dims.height; ++y) {
            for (std::int64_t x = 0; x < d.dims.width; ++x) {
                if (p[y * d.dims.width + x] > 0) {
                    x0 = std::min(x0, x);
                    x1 = std::max(x1, x);
                    y0 = std::min(y0, y);
                    y1 = std::max(y1, y);
                }
            }
        }
        return std::array<std::int64_t, 4>{x0, x1, y0, y1};
    };

    for (std::int64_t s = 0; s < d.dims.count; ++s) {
        std::vector<std::pair<double, double>> pts;
        for (std::int64_t t = 0; t < d.dims.timesteps; ++t) pts.push_back(centroid(d, s, t));
        // Velocity may only change at a wall contact; a contact requires the
        // previous bounding box to lie within speed_max pixels of some edge.
        for (std::size_t t = 2; t < pts.size(); ++t) {
            const double ddx = (pts[t].first - pts[t - 1].first) -
                               (pts[t - 1].first - pts[t - 2].first);
            const double ddy = (pts[t].second - pts[t - 1].second) -
                               (pts[t - 1].second - pts[t - 2].second);
            if (std::abs(ddx) > 1.0 || std::abs(ddy) > 1.0) {
                const auto bb = bbox(s, std::int64_t(t) - 1);
                const bool near_wall = bb[0] <= cfg.speed_max - 1 ||
                                       bb[1] >= d.dims.width - cfg.speed_max ||
                                       bb[2] <= cfg.speed_max - 1 ||
                                       bb[3] >= d.dims.height - cfg.speed_max;
                CHECK(near_wall);
            }
        }
    }
}

TEST_CASE("label balance: shape-type counts within 5 sigma of n/k") {
    GeneratorConfig cfg = small_config();
    cfg.count = 3000;
    SequenceDataset d = generate_dataset(cfg);
    const double n = double(cfg.count);
    const double k = double(cfg.shapes.size());
    const double expect = n / k;
    const double sigma = std::sqrt(n * (1.0 / k) * (1.0 - 1.0 / k));
    std::vector<int> counts(cfg.shapes.size(), 0);
    for (auto v : d.shape_labels) counts[std::size_t(v)]++;
    for (int c : counts) CHECK(std::abs(c - expect) <= 5.0 * sigma);
}

TEST_CASE("dataset file round-trip is bit-exact") {
    SequenceDataset d = generate_dataset(small_config());
    TempFile f("rwae_test_roundtrip.bin");
    save_dataset(d, f.path);
    SequenceDataset r = load_dataset(f.path);
    CHECK(r.frames == d.frames);
    CHECK(r.shape_labels == d.shape_labels);
    CHECK(r.motion_labels == d.motion_labels);
    CHECK(r.shape_vocab == d.shape_vocab);
    CHECK(r.motion_vocab == d.motion_vocab);
    CHECK(r.dims.count == d.dims.count);
}

TEST_CASE("dataset loader rejects corruption, truncation and version skew") {
    SequenceDataset d = generate_dataset(small_config());
    TempFile f("rwae_test_corrupt.bin");
    save_dataset(d, f.path);

    SUBCASE("truncated payload") {
        auto size = fs::file_size(f.path);
        fs::resize_file(f.path, size / 2);
        CHECK_THROWS_AS(load_dataset(f.path), format_error);
    }
    SUBCASE("future format version") {
        std::ifstream is(f.path, std::ios::binary);
        std::string all((std::istreambuf_iterator<char>(is)), {});
        is.close();
        const auto at = all.find("v1");
        all.replace(at, 2, "v9");
        std::ofstream os(f.path, std::ios::binary);
        os.write(all.data(), std::streamsize(all.size()));
        os.close();
        CHECK_THROWS_WITH_AS(load_dataset(f.path),
                             doctest::Contains("version"), format_error);
    }
    SUBCASE("wrong magic") {
        std::ofstream os(f.path, std::ios::binary);
        os << "NOT-A-DATASET v1\n";
        os.close();
        CHECK_THROWS_AS(load_dataset(f.path), format_error);
    }
    SUBCASE("missing file is an I/O error") {
        CHECK_THROWS_AS(load_dataset("/nonexistent/rwae.bin"), io_error);
    }
}

TEST_CASE("epoch batching: full coverage, drop-last, deterministic under seed") {
    SequenceDataset d = generate_dataset(small_config()); // 60 sequences

    SUBCASE("10 sequences, batch 4 -> sizes 4,4 and 2 dropped") {
        Rng rng(1);
        auto idx = epoch_index_batches(10, 4, rng);
        REQUIRE(idx.size() == 2);
        CHECK(idx[0].size() == 4);
        CHECK(idx[1].size() == 4);
    }
    SUBCASE("emitted indices equal the first floor(n/b)*b shuffled indices") {
        Rng rng_a(7);
        auto batches_a = epoch_index_batches(60, 8, rng_a);
        // Oracle: replicate the shuffle independently.
        Rng rng_b(7);
        std::vector<std::int64_t> order(60);
        for (int i = 0; i < 60; ++i) order[std::size_t(i)] = i;
        rng_b.shuffle(order);
        std::size_t at = 0;
        std::set<std::int64_t> seen;
        for (const auto& batch : batches_a) {
            for (auto v : batch) {
                CHECK(v == order[at++]);
                seen.insert(v);
            }
        }
        CHECK(at == 56); // 7 batches of 8
        CHECK(seen.size() == 56);
    }
    SUBCASE("same seed, same order") {
        auto a = batches(d, 8, 123);
        auto b = batches(d, 8, 123);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].frames[0] == b[i].frames[0]);
            CHECK(a[i].shape_labels == b[i].shape_labels);
        }
    }
    SUBCASE("batch_size below 2 is rejected") {
        CHECK_THROWS_AS(batches(d, 1, 1), std::invalid_argument);
    }
}
