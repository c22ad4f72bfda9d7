#pragma once

#include <string>

#include "rwae/graph.hpp"

namespace rwae {

// Writes one frame as a binary portable graymap (P5) or pixmap (P6).
// `frame` holds C*H*W values in [0,1], channel-major; C must be 1 or 3.
void write_frame_image(const std::string& path, const double* frame, int channels, int height,
                       int width);

// Writes a grid of frames (rows x cols tiles) into a single image with a
// 1-pixel separator between tiles.
void write_frame_grid(const std::string& path, const std::vector<const double*>& frames,
                      int rows, int cols, int channels, int height, int width);

} // namespace rwae
