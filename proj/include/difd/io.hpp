#pragma once

#include "difd/image.hpp"

#include <string>
#include <utility>
#include <vector>

namespace difd {

// PNG or binary PPM/PGM (8/16-bit), detected by magic bytes.
Image read_image(const std::string& path);

// Quantizes with round(v * (2^depth - 1)). Samples must lie in [0,1] unless
// clamp is set (then they are clamped first; non-finite is always an error).
// Format picked by extension: .png, .ppm (3 channels), .pgm (1 channel).
void write_image(const Image& img, const std::string& path, int bit_depth = 16,
                 bool clamp = false);

// Lossless float raster: "DIFD <W> <H> <C>\n" then W*H*C little-endian f32,
// row-major and channel-interleaved. Round-trips are bit-exact.
Image read_float_dump(const std::string& path);
void write_float_dump(const Image& img, const std::string& path);

// read_image plus .difd dispatch, for manifest entries.
Image load_frame(const std::string& path);

// One "index<TAB>path" record per line; indices strictly increasing. '#'
// starts a comment; "# fps <value>" declares the frame rate. Relative paths
// are resolved against the manifest's directory on read.
struct FrameManifest {
    std::vector<std::pair<int, std::string>> entries;
    double fps = 0.0;
};

FrameManifest read_manifest(const std::string& path);
void write_manifest(const FrameManifest& manifest, const std::string& path);

} // namespace difd
