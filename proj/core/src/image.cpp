#include "rwae/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "rwae/errors.hpp"

namespace rwae {

namespace {

unsigned char to_byte(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(c * 255.0));
}

void write_pnm(const std::string& path, const std::vector<unsigned char>& bytes, int channels,
               int height, int width) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open '" + path + "' for writing");
    os << (channels == 1 ? "P5" : "P6") << "\n" << width << " " << height << "\n255\n";
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw io_error("write failed for '" + path + "'");
}

// Converts channel-major [0,1] data to interleaved bytes.
void blit(const double* frame, int channels, int height, int width,
          std::vector<unsigned char>& out, int out_width, int oy, int ox, int out_channels) {
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < out_channels; ++c) {
                const int src_c = channels == 1 ? 0 : c;
                const double v = frame[(src_c * height + y) * width + x];
                out[static_cast<std::size_t>(((oy + y) * out_width + (ox + x)) * out_channels +
                                             c)] = to_byte(v);
            }
        }
    }
}

} // namespace

void write_frame_image(const std::string& path, const double* frame, int channels, int height,
                       int width) {
    if (channels != 1 && channels != 3) {
        throw std::invalid_argument("write_frame_image: channels must be 1 or 3");
    }
    std::vector<unsigned char> bytes(
        static_cast<std::size_t>(height) * width * channels);
    blit(frame, channels, height, width, bytes, width, 0, 0, channels);
    write_pnm(path, bytes, channels, height, width);
}

void write_frame_grid(const std::string& path, const std::vector<const double*>& frames,
                      int rows, int cols, int channels, int height, int width) {
    if (channels != 1 && channels != 3) {
        throw std::invalid_argument("write_frame_grid: channels must be 1 or 3");
    }
    if (static_cast<std::size_t>(rows) * cols != frames.size()) {
        throw std::invalid_argument("write_frame_grid: grid shape does not match frame count");
    }
    const int gw = cols * width + (cols - 1);
    const int gh = rows * height + (rows - 1);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(gw) * gh * channels, 64);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            blit(frames[static_cast<std::size_t>(r) * cols + c], channels, height, width, bytes,
                 gw, r * (height + 1), c * (width + 1), channels);
        }
    }
    write_pnm(path, bytes, channels, gh, gw);
}

} // namespace rwae
