#include <cmath>

#include "rwae/dataset.hpp"
#include "rwae/errors.hpp"
#include "rwae/rng.hpp"

namespace rwae {

namespace {

// Binary mask for one shape inside a size x size bounding box.
std::vector<std::uint8_t> shape_mask(ShapeType shape, int size) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(size * size), 0);
    const double c = (size - 1) / 2.0;
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            bool on = false;
            switch (shape) {
                case ShapeType::Square:
                    on = true;
                    break;
                case ShapeType::Circle: {
                    const double r = size / 2.0;
                    const double di = i - c, dj = j - c;
                    on = di * di + dj * dj <= r * r;
                    break;
                }
                case ShapeType::Triangle:
                    on = std::abs(j - c) <= (i + 1) / 2.0;
                    break;
            }
            if (on) mask[static_cast<std::size_t>(i * size + j)] = 1;
        }
    }
    return mask;
}

struct Velocity {
    int vx = 0;
    int vy = 0;
};

Velocity random_direction(int speed, Rng& rng) {
    // 8 compass directions.
    static constexpr int dirs[8][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                       {1, 1},  {1, -1}, {-1, 1}, {-1, -1}};
    const auto d = dirs[rng.below(8)];
    return {d[0] * speed, d[1] * speed};
}

int random_speed(const GeneratorConfig& cfg, Rng& rng) {
    return cfg.speed_min +
           static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.speed_max - cfg.speed_min + 1)));
}

// Reflect a coordinate into [0, limit]; flips the velocity on contact.
void reflect(int& p, int& v, int limit) {
    if (p < 0) {
        p = -p;
        v = -v;
    } else if (p > limit) {
        p = 2 * limit - p;
        v = -v;
    }
}

} // namespace

SequenceDataset generate_dataset(const GeneratorConfig& cfg) {
    cfg.validate();

    SequenceDataset out;
    out.dims.count = cfg.count;
    out.dims.timesteps = cfg.timesteps;
    out.dims.channels = 1;
    out.dims.height = cfg.image_size;
    out.dims.width = cfg.image_size;
    out.frames.assign(
        static_cast<std::size_t>(out.dims.count * out.dims.timesteps * out.dims.frame_dim()),
        0.0f);
    out.labeled = true;
    out.shape_labels.resize(static_cast<std::size_t>(cfg.count));
    out.motion_labels.resize(static_cast<std::size_t>(cfg.count));
    for (ShapeType s : cfg.shapes) out.shape_vocab.push_back(shape_name(s));
    for (MotionType m : cfg.motions) out.motion_vocab.push_back(motion_name(m));

    const int n = cfg.image_size;
    for (int seq = 0; seq < cfg.count; ++seq) {
        // Independent per-sequence stream, so generation order is irrelevant.
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(seq)));

        const auto shape_id = static_cast<std::int32_t>(rng.below(cfg.shapes.size()));
        const auto motion_id = static_cast<std::int32_t>(rng.below(cfg.motions.size()));
        const ShapeType shape = cfg.shapes[static_cast<std::size_t>(shape_id)];
        const MotionType motion = cfg.motions[static_cast<std::size_t>(motion_id)];
        const int size = cfg.sizes[rng.below(cfg.sizes.size())];
        const float color = static_cast<float>(cfg.colors[rng.below(cfg.colors.size())]);
        const auto mask = shape_mask(shape, size);
        out.shape_labels[static_cast<std::size_t>(seq)] = shape_id;
        out.motion_labels[static_cast<std::size_t>(seq)] = motion_id;

        const int limit = n - size; // max top-left coordinate
        int px = static_cast<int>(rng.below(static_cast<std::uint64_t>(limit + 1)));
        int py = static_cast<int>(rng.below(static_cast<std::uint64_t>(limit + 1)));

        const int speed = random_speed(cfg, rng);
        Velocity v;
        bool zig_vertical = false; // primary axis of the zigzag
        int zig_sign = 1;
        switch (motion) {
            case MotionType::Line:
                if (rng.below(2) == 0) {
                    v = {rng.below(2) == 0 ? speed : -speed, 0};
                } else {
                    v = {0, rng.below(2) == 0 ? speed : -speed};
                }
                break;
            case MotionType::Diagonal:
                v = {rng.below(2) == 0 ? speed : -speed, rng.below(2) == 0 ? speed : -speed};
                break;
            case MotionType::Zigzag:
                zig_vertical = rng.below(2) == 0;
                zig_sign = rng.below(2) == 0 ? 1 : -1;
                if (zig_vertical) {
                    v = {zig_sign * speed, rng.below(2) == 0 ? speed : -speed};
                } else {
                    v = {rng.below(2) == 0 ? speed : -speed, zig_sign * speed};
                }
                break;
            case MotionType::Bounce:
                v = random_direction(speed, rng);
                break;
        }

        for (int t = 0; t < cfg.timesteps; ++t) {
            if (t > 0) {
                if (motion == MotionType::Bounce) {
                    int nx = px + v.vx, ny = py + v.vy;
                    if (nx < 0 || nx > limit || ny < 0 || ny > limit) {
                        // Wall contact: fresh speed and direction that stay in frame.
                        for (int attempt = 0; attempt < 64; ++attempt) {
                            v = random_direction(random_speed(cfg, rng), rng);
                            nx = px + v.vx;
                            ny = py + v.vy;
                            if (nx >= 0 && nx <= limit && ny >= 0 && ny <= limit) break;
                        }
                        reflect(nx, v.vx, limit);
                        reflect(ny, v.vy, limit);
                    }
                    px = nx;
                    py = ny;
                } else {
                    if (motion == MotionType::Zigzag && t % 2 == 0) {
                        // Flip the cross-axis component every second step.
                        if (zig_vertical) v.vx = -v.vx;
                        else v.vy = -v.vy;
                    }
                    px += v.vx;
                    py += v.vy;
                    reflect(px, v.vx, limit);
                    reflect(py, v.vy, limit);
                }
            }
            float* frame = out.frames.data() +
                           (static_cast<std::int64_t>(seq) * cfg.timesteps + t) *
                               out.dims.frame_dim();
            for (int i = 0; i < size; ++i) {
                for (int j = 0; j < size; ++j) {
                    if (mask[static_cast<std::size_t>(i * size + j)]) {
                        frame[(py + i) * n + (px + j)] = color;
                    }
                }
            }
        }
    }
    return out;
}

} // namespace rwae
