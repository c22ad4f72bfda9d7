#include <cstring>
#include <fstream>

#include "rwae/errors.hpp"
#include "rwae/train.hpp"

namespace rwae {

namespace {

constexpr char kMagic[8] = {'R', 'W', 'A', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 4);
}

void put_i64(std::ostream& os, std::int64_t v) { put_u64(os, static_cast<std::uint64_t>(v)); }

void put_string(std::ostream& os, const std::string& s) {
    put_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_matrix(std::ostream& os, const Matrix& m) {
    put_u64(os, static_cast<std::uint64_t>(m.rows()));
    put_u64(os, static_cast<std::uint64_t>(m.cols()));
    // Doubles written in row-major order, little-endian.
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double d = m(i, j);
            std::uint64_t bits;
            std::memcpy(&bits, &d, 8);
            put_u64(os, bits);
        }
    }
}

void read_exact(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
        throw format_error("checkpoint file truncated");
    }
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char buf[8];
    read_exact(is, buf, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char buf[4];
    read_exact(is, buf, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::int64_t get_i64(std::istream& is) { return static_cast<std::int64_t>(get_u64(is)); }

std::string get_string(std::istream& is, std::uint64_t max_len = 1ull << 30) {
    const std::uint64_t n = get_u64(is);
    if (n > max_len) throw format_error("checkpoint: implausible string length");
    std::string s(static_cast<std::size_t>(n), '\0');
    read_exact(is, s.data(), s.size());
    return s;
}

Matrix get_matrix(std::istream& is) {
    const std::uint64_t rows = get_u64(is);
    const std::uint64_t cols = get_u64(is);
    if (rows > (1u << 24) || cols > (1u << 24)) {
        throw format_error("checkpoint: implausible array shape");
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const std::uint64_t bits = get_u64(is);
            double d;
            std::memcpy(&d, &bits, 8);
            m(i, j) = d;
        }
    }
    return m;
}

} // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open '" + path + "' for writing");
    os.write(kMagic, sizeof(kMagic));
    put_u32(os, kVersion);

    KvFile kv;
    ck.config.to_kv(kv);
    put_string(os, to_kv_text(kv));

    put_u64(os, ck.arrays.size());
    for (const auto& [name, m] : ck.arrays) {
        put_string(os, name);
        put_matrix(os, m);
    }
    put_u64(os, ck.scalars.size());
    for (const auto& [name, v] : ck.scalars) {
        put_string(os, name);
        put_i64(os, v);
    }
    put_string(os, ck.rng_state);
    if (!os) throw io_error("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open checkpoint file '" + path + "'");
    char magic[8];
    read_exact(is, magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) {
        throw format_error("not a checkpoint file (bad magic)");
    }
    const std::uint32_t version = get_u32(is);
    if (version != kVersion) {
        throw format_error("unsupported checkpoint version " + std::to_string(version) +
                           " (expected " + std::to_string(kVersion) + ")");
    }

    Checkpoint ck;
    ck.version = version;
    ck.config = TrainConfig::from_kv(parse_kv_text(get_string(is)));

    const std::uint64_t n_arrays = get_u64(is);
    for (std::uint64_t i = 0; i < n_arrays; ++i) {
        std::string name = get_string(is, 1u << 16);
        ck.arrays[name] = get_matrix(is);
    }
    const std::uint64_t n_scalars = get_u64(is);
    for (std::uint64_t i = 0; i < n_scalars; ++i) {
        std::string name = get_string(is, 1u << 16);
        ck.scalars[name] = get_i64(is);
    }
    ck.rng_state = get_string(is);

    char extra;
    if (is.read(&extra, 1).gcount() != 0) {
        throw format_error("checkpoint file has trailing bytes");
    }
    return ck;
}

} // namespace rwae
