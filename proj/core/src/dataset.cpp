#include "rwae/dataset.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "rwae/errors.hpp"
#include "rwae/kv.hpp"

namespace rwae {

namespace {

constexpr const char* kMagic = "RWAE-DATASET";
constexpr const char* kVersion = "v1";

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace

std::string shape_name(ShapeType s) {
    switch (s) {
        case ShapeType::Triangle: return "triangle";
        case ShapeType::Square: return "square";
        case ShapeType::Circle: return "circle";
    }
    throw std::logic_error("shape_name: bad enum");
}

std::string motion_name(MotionType m) {
    switch (m) {
        case MotionType::Line: return "line";
        case MotionType::Zigzag: return "zigzag";
        case MotionType::Diagonal: return "diagonal";
        case MotionType::Bounce: return "bounce";
    }
    throw std::logic_error("motion_name: bad enum");
}

ShapeType parse_shape(const std::string& name) {
    if (name == "triangle") return ShapeType::Triangle;
    if (name == "square") return ShapeType::Square;
    if (name == "circle") return ShapeType::Circle;
    throw std::invalid_argument("unknown shape type '" + name + "'");
}

MotionType parse_motion(const std::string& name) {
    if (name == "line") return MotionType::Line;
    if (name == "zigzag") return MotionType::Zigzag;
    if (name == "diagonal") return MotionType::Diagonal;
    if (name == "bounce") return MotionType::Bounce;
    throw std::invalid_argument("unknown motion type '" + name + "'");
}

const float* SequenceDataset::frame_ptr(std::int64_t seq, std::int64_t t) const {
    return frames.data() + (seq * dims.timesteps + t) * dims.frame_dim();
}

Matrix SequenceDataset::sequence(std::int64_t seq) const {
    Matrix m(dims.timesteps, dims.frame_dim());
    for (std::int64_t t = 0; t < dims.timesteps; ++t) {
        const float* p = frame_ptr(seq, t);
        for (std::int64_t j = 0; j < dims.frame_dim(); ++j) m(t, j) = p[j];
    }
    return m;
}

void SequenceDataset::validate() const {
    if (dims.count < 1 || dims.timesteps < 1 || dims.channels < 1 || dims.height < 1 ||
        dims.width < 1) {
        throw std::invalid_argument("SequenceDataset: non-positive dimensions");
    }
    const std::size_t expect =
        static_cast<std::size_t>(dims.count * dims.timesteps * dims.frame_dim());
    if (frames.size() != expect) {
        throw std::invalid_argument("SequenceDataset: frame buffer size mismatch");
    }
    if (labeled && (shape_labels.size() != static_cast<std::size_t>(dims.count) ||
                    motion_labels.size() != static_cast<std::size_t>(dims.count))) {
        throw std::invalid_argument("SequenceDataset: label arrays must cover every sequence");
    }
}

void GeneratorConfig::validate() const {
    if (count < 1) throw std::invalid_argument("GeneratorConfig: count must be >= 1");
    if (timesteps < 1) throw std::invalid_argument("GeneratorConfig: timesteps must be >= 1");
    if (image_size < 4) throw std::invalid_argument("GeneratorConfig: image_size must be >= 4");
    if (shapes.empty() || motions.empty() || sizes.empty() || colors.empty()) {
        throw std::invalid_argument("GeneratorConfig: every control parameter needs a value");
    }
    int max_size = 0;
    for (int s : sizes) {
        if (s < 2) throw std::invalid_argument("GeneratorConfig: shape size must be >= 2");
        if (s > image_size) {
            throw std::invalid_argument("GeneratorConfig: shape size " + std::to_string(s) +
                                        " exceeds frame size " + std::to_string(image_size));
        }
        max_size = std::max(max_size, s);
    }
    for (double c : colors) {
        if (!(c > 0.0 && c <= 1.0)) {
            throw std::invalid_argument("GeneratorConfig: colors must lie in (0, 1]");
        }
    }
    if (speed_min < 1 || speed_max < speed_min) {
        throw std::invalid_argument("GeneratorConfig: need 1 <= speed_min <= speed_max");
    }
    if (speed_max > image_size - max_size) {
        throw std::invalid_argument(
            "GeneratorConfig: speed_max leaves no room for exact wall reflection");
    }
}

// --- file format ---------------------------------------------------------------

namespace {

void write_raw(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_raw(std::istream& is, void* p, std::size_t n, const char* what) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
        throw format_error(std::string("dataset file truncated while reading ") + what);
    }
}

std::string join_csv(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += items[i];
    }
    return out;
}

} // namespace

void save_dataset(const SequenceDataset& data, const std::string& path) {
    data.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open '" + path + "' for writing");
    os << kMagic << " " << kVersion << "\n";
    os << "count " << data.dims.count << "\n";
    os << "timesteps " << data.dims.timesteps << "\n";
    os << "channels " << data.dims.channels << "\n";
    os << "height " << data.dims.height << "\n";
    os << "width " << data.dims.width << "\n";
    os << "labeled " << (data.labeled ? 1 : 0) << "\n";
    os << "shapes " << join_csv(data.shape_vocab) << "\n";
    os << "motions " << join_csv(data.motion_vocab) << "\n";
    os << "end\n";
    write_raw(os, data.frames.data(), data.frames.size() * sizeof(float));
    if (data.labeled) {
        write_raw(os, data.shape_labels.data(), data.shape_labels.size() * sizeof(std::int32_t));
        write_raw(os, data.motion_labels.data(), data.motion_labels.size() * sizeof(std::int32_t));
    }
    if (!os) throw io_error("write failed for '" + path + "'");
}

SequenceDataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open dataset file '" + path + "'");

    std::string line;
    if (!std::getline(is, line)) throw format_error("dataset file is empty");
    {
        std::istringstream hs(line);
        std::string magic, version;
        hs >> magic >> version;
        if (magic != kMagic) throw format_error("not a dataset file (bad magic)");
        if (version != kVersion) {
            throw format_error("unsupported dataset format version '" + version + "' (expected " +
                               kVersion + ")");
        }
    }

    SequenceDataset out;
    bool saw_end = false;
    while (std::getline(is, line)) {
        std::istringstream hs(line);
        std::string key;
        hs >> key;
        if (key == "end") {
            saw_end = true;
            break;
        }
        std::string rest;
        std::getline(hs, rest);
        rest = trim(rest);
        if (key == "count") out.dims.count = std::stoll(rest);
        else if (key == "timesteps") out.dims.timesteps = std::stoll(rest);
        else if (key == "channels") out.dims.channels = std::stoll(rest);
        else if (key == "height") out.dims.height = std::stoll(rest);
        else if (key == "width") out.dims.width = std::stoll(rest);
        else if (key == "labeled") out.labeled = rest == "1";
        else if (key == "shapes") out.shape_vocab = split_csv(rest);
        else if (key == "motions") out.motion_vocab = split_csv(rest);
        else throw format_error("dataset header: unknown field '" + key + "'");
    }
    if (!saw_end) throw format_error("dataset header missing 'end' marker");
    if (out.dims.count < 1 || out.dims.timesteps < 1 || out.dims.channels < 1 ||
        out.dims.height < 1 || out.dims.width < 1) {
        throw format_error("dataset header: bad dimensions");
    }

    const std::size_t n_frames =
        static_cast<std::size_t>(out.dims.count * out.dims.timesteps * out.dims.frame_dim());
    out.frames.resize(n_frames);
    read_raw(is, out.frames.data(), n_frames * sizeof(float), "frames");
    for (float v : out.frames) {
        if (!(v >= 0.0f && v <= 1.0f)) throw format_error("dataset frames outside [0,1]");
    }
    if (out.labeled) {
        out.shape_labels.resize(static_cast<std::size_t>(out.dims.count));
        out.motion_labels.resize(static_cast<std::size_t>(out.dims.count));
        read_raw(is, out.shape_labels.data(), out.shape_labels.size() * sizeof(std::int32_t),
                 "shape labels");
        read_raw(is, out.motion_labels.data(), out.motion_labels.size() * sizeof(std::int32_t),
                 "motion labels");
        const auto n_shapes = static_cast<std::int32_t>(out.shape_vocab.size());
        const auto n_motions = static_cast<std::int32_t>(out.motion_vocab.size());
        for (std::int32_t v : out.shape_labels) {
            if (v < 0 || v >= n_shapes) throw format_error("dataset shape label out of range");
        }
        for (std::int32_t v : out.motion_labels) {
            if (v < 0 || v >= n_motions) throw format_error("dataset motion label out of range");
        }
    }
    // Trailing garbage means the header lied about the payload size.
    char extra;
    if (is.read(&extra, 1).gcount() != 0) {
        throw format_error("dataset file has trailing bytes beyond the declared payload");
    }
    out.validate();
    return out;
}

// --- batching --------------------------------------------------------------------

SequenceBatch make_batch(const SequenceDataset& data, const std::vector<std::int64_t>& indices) {
    if (indices.empty()) throw std::invalid_argument("make_batch: empty index set");
    SequenceBatch b;
    b.size = static_cast<std::int64_t>(indices.size());
    b.timesteps = data.dims.timesteps;
    b.frame_dim = data.dims.frame_dim();
    b.frames.reserve(static_cast<std::size_t>(b.timesteps));
    for (std::int64_t t = 0; t < b.timesteps; ++t) {
        Matrix m(b.size, b.frame_dim);
        for (std::int64_t r = 0; r < b.size; ++r) {
            const float* p = data.frame_ptr(indices[static_cast<std::size_t>(r)], t);
            for (std::int64_t j = 0; j < b.frame_dim; ++j) m(r, j) = p[j];
        }
        b.frames.push_back(std::move(m));
    }
    if (data.labeled) {
        for (std::int64_t idx : indices) {
            b.shape_labels.push_back(data.shape_labels[static_cast<std::size_t>(idx)]);
            b.motion_labels.push_back(data.motion_labels[static_cast<std::size_t>(idx)]);
        }
    }
    return b;
}

SequenceDataset subset(const SequenceDataset& data, const std::vector<std::int64_t>& indices) {
    if (indices.empty()) throw std::invalid_argument("subset: empty index set");
    SequenceDataset out;
    out.dims = data.dims;
    out.dims.count = static_cast<std::int64_t>(indices.size());
    out.labeled = data.labeled;
    out.shape_vocab = data.shape_vocab;
    out.motion_vocab = data.motion_vocab;
    const std::int64_t per_seq = data.dims.timesteps * data.dims.frame_dim();
    out.frames.reserve(static_cast<std::size_t>(out.dims.count * per_seq));
    for (std::int64_t idx : indices) {
        if (idx < 0 || idx >= data.dims.count) {
            throw std::invalid_argument("subset: index out of range");
        }
        const float* p = data.frames.data() + idx * per_seq;
        out.frames.insert(out.frames.end(), p, p + per_seq);
        if (data.labeled) {
            out.shape_labels.push_back(data.shape_labels[static_cast<std::size_t>(idx)]);
            out.motion_labels.push_back(data.motion_labels[static_cast<std::size_t>(idx)]);
        }
    }
    return out;
}

std::vector<std::vector<std::int64_t>> epoch_index_batches(std::int64_t count, int batch_size,
                                                           Rng& rng) {
    if (batch_size < 2) {
        throw std::invalid_argument("batches: batch_size must be >= 2 (MMD needs n >= 2)");
    }
    std::vector<std::int64_t> order(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);
    std::vector<std::vector<std::int64_t>> out;
    const std::int64_t full = count / batch_size;
    for (std::int64_t k = 0; k < full; ++k) {
        out.emplace_back(order.begin() + k * batch_size, order.begin() + (k + 1) * batch_size);
    }
    return out;
}

std::vector<SequenceBatch> batches(const SequenceDataset& data, int batch_size,
                                   std::uint64_t shuffle_seed) {
    Rng rng(shuffle_seed);
    std::vector<SequenceBatch> out;
    for (const auto& idx : epoch_index_batches(data.dims.count, batch_size, rng)) {
        out.push_back(make_batch(data, idx));
    }
    return out;
}

} // namespace rwae
