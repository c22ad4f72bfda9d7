#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rwae/graph.hpp"
#include "rwae/rng.hpp"

namespace rwae {

enum class ShapeType { Triangle, Square, Circle };
enum class MotionType { Line, Zigzag, Diagonal, Bounce };

std::string shape_name(ShapeType s);
std::string motion_name(MotionType m);
ShapeType parse_shape(const std::string& name);
MotionType parse_motion(const std::string& name);

struct DatasetDims {
    std::int64_t count = 0;
    std::int64_t timesteps = 0;
    std::int64_t channels = 1;
    std::int64_t height = 0;
    std::int64_t width = 0;

    std::int64_t frame_dim() const { return channels * height * width; }
};

// Sequences of frames in [0,1], stored as float32 in sequence-major
// (B, T, C, H, W) order, plus optional per-sequence content/motion labels.
struct SequenceDataset {
    DatasetDims dims;
    std::vector<float> frames;
    bool labeled = false;
    std::vector<std::int32_t> shape_labels;
    std::vector<std::int32_t> motion_labels;
    std::vector<std::string> shape_vocab;
    std::vector<std::string> motion_vocab;

    const float* frame_ptr(std::int64_t seq, std::int64_t t) const;
    // One sequence as a T x frame_dim double matrix.
    Matrix sequence(std::int64_t seq) const;
    void validate() const;
};

struct GeneratorConfig {
    int image_size = 16; // H == W
    int timesteps = 8;
    int count = 3000;
    std::vector<ShapeType> shapes = {ShapeType::Triangle, ShapeType::Square, ShapeType::Circle};
    std::vector<MotionType> motions = {MotionType::Line, MotionType::Zigzag,
                                       MotionType::Diagonal};
    std::vector<int> sizes = {7};
    std::vector<double> colors = {1.0}; // grayscale intensity levels
    int speed_min = 1;
    int speed_max = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

// Renders one shape per sequence moving under one motion type. Shapes are
// binary masks stamped at integer pixel positions (no anti-aliasing), so the
// shape's appearance is a pure translation of its first-frame mask. Bounce
// motion resamples speed and direction at every wall contact; the other
// motion types are deterministic given the start state.
SequenceDataset generate_dataset(const GeneratorConfig& cfg);

// On-disk container: text header (format version, dims, label vocabularies),
// then frames as little-endian float32 in (B,T,C,H,W) order, then the two
// label arrays as little-endian int32.
void save_dataset(const SequenceDataset& data, const std::string& path);
SequenceDataset load_dataset(const std::string& path);

// A training batch: per-timestep B x frame_dim double matrices.
struct SequenceBatch {
    std::int64_t size = 0;
    std::int64_t timesteps = 0;
    std::int64_t frame_dim = 0;
    std::vector<Matrix> frames; // timesteps entries
    std::vector<std::int32_t> shape_labels;
    std::vector<std::int32_t> motion_labels;
};

SequenceBatch make_batch(const SequenceDataset& data, const std::vector<std::int64_t>& indices);

// New dataset holding the selected sequences (frames copied, labels carried).
SequenceDataset subset(const SequenceDataset& data, const std::vector<std::int64_t>& indices);

// One epoch's batch index sets: a seeded shuffle chopped into full batches,
// the final short batch dropped (two-sample estimators need n >= 2).
std::vector<std::vector<std::int64_t>> epoch_index_batches(std::int64_t count, int batch_size,
                                                           Rng& rng);

// Convenience: materialized batches for one epoch under a fresh seed.
std::vector<SequenceBatch> batches(const SequenceDataset& data, int batch_size,
                                   std::uint64_t shuffle_seed);

} // namespace rwae
