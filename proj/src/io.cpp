#include "difd/io.hpp"

#include "difd/error.hpp"

#include <png.h>

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "float dump I/O assumes a little-endian host");

namespace difd {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f)
        throw FormatError("cannot open '" + path + "'");
    return f;
}

// ---- PNG ----------------------------------------------------------------

Image read_png(std::FILE* f, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("libpng init failed");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<std::uint8_t> data;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("failed to decode PNG '" + path + "'");
    }
    png_init_io(png, f);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int depth = png_get_bit_depth(png, info);
    int color = png_get_color_type(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png); // alpha carries no brightness evidence
    if (depth == 16)
        png_set_swap(png); // network order -> little endian
    png_read_update_info(png, info);

    depth = png_get_bit_depth(png, info);
    int channels = png_get_channels(png, info);
    if (depth != 8 && depth != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("unsupported PNG bit depth in '" + path + "'");
    }
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("unsupported PNG channel count in '" + path + "'");
    }

    const std::size_t stride = static_cast<std::size_t>(w) * channels * (depth / 8);
    data.resize(stride * h);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        row_ptrs[y] = data.data() + stride * y;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (depth == 8)
        return decode_to_float(std::span<const std::uint8_t>(data),
                               static_cast<int>(w), static_cast<int>(h), channels);
    return decode_to_float(
        std::span<const std::uint16_t>(reinterpret_cast<const std::uint16_t*>(data.data()),
                                       data.size() / 2),
        static_cast<int>(w), static_cast<int>(h), channels);
}

void write_png(const Image& img, const std::string& path, int bit_depth,
               const std::vector<std::uint8_t>& interleaved) {
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw FormatError("libpng init failed");
    }
    // everything with a destructor is constructed before the setjmp point
    const std::size_t stride =
        static_cast<std::size_t>(img.width()) * img.channels() * (bit_depth / 8);
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
    for (int y = 0; y < img.height(); ++y)
        rows[static_cast<std::size_t>(y)] =
            const_cast<std::uint8_t*>(interleaved.data()) + stride * static_cast<std::size_t>(y);

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw FormatError("failed to encode PNG '" + path + "'");
    }
    png_init_io(png, f.get());
    const int color = img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), bit_depth, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16)
        png_set_swap(png);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// ---- PNM (binary P5/P6) --------------------------------------------------

int pnm_token(std::FILE* f, const std::string& path) {
    // skips whitespace and '#' comments, reads one nonnegative integer
    int c = std::fgetc(f);
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n')
                c = std::fgetc(f);
        } else if (!std::isspace(c)) {
            break;
        }
        c = std::fgetc(f);
    }
    if (c == EOF || !std::isdigit(c))
        throw FormatError("malformed PNM header in '" + path + "'");
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > std::numeric_limits<int>::max())
            throw FormatError("PNM header value out of range in '" + path + "'");
        c = std::fgetc(f);
    }
    return static_cast<int>(v);
}

Image read_pnm(std::FILE* f, const std::string& path) {
    int m0 = std::fgetc(f);
    int m1 = std::fgetc(f);
    if (m0 != 'P' || (m1 != '5' && m1 != '6'))
        throw FormatError("not a binary PGM/PPM file: '" + path + "'");
    const int channels = (m1 == '6') ? 3 : 1;
    const int w = pnm_token(f, path);
    const int h = pnm_token(f, path);
    const int maxval = pnm_token(f, path);
    // exactly one whitespace byte separates header and payload (consumed by
    // pnm_token's terminating read)
    if (w < 1 || h < 1)
        throw FormatError("invalid PNM dimensions in '" + path + "'");
    if (maxval != 255 && maxval != 65535)
        throw FormatError("unsupported PNM maxval " + std::to_string(maxval) + " in '" + path +
                          "' (need 255 or 65535)");

    const std::size_t count = static_cast<std::size_t>(w) * h * channels;
    if (maxval == 255) {
        std::vector<std::uint8_t> buf(count);
        if (std::fread(buf.data(), 1, count, f) != count)
            throw FormatError("truncated PNM payload in '" + path + "'");
        return decode_to_float(std::span<const std::uint8_t>(buf), w, h, channels);
    }
    std::vector<std::uint8_t> buf(count * 2);
    if (std::fread(buf.data(), 1, buf.size(), f) != buf.size())
        throw FormatError("truncated PNM payload in '" + path + "'");
    std::vector<std::uint16_t> samples(count);
    for (std::size_t i = 0; i < count; ++i) // 16-bit PNM is big-endian
        samples[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
    return decode_to_float(std::span<const std::uint16_t>(samples), w, h, channels);
}

void write_pnm(const Image& img, const std::string& path, int bit_depth,
               const std::vector<std::uint8_t>& interleaved) {
    FilePtr f = open_file(path, "wb");
    const int maxval = bit_depth == 8 ? 255 : 65535;
    std::string header = (img.channels() == 3 ? std::string("P6") : std::string("P5")) + "\n" +
                         std::to_string(img.width()) + " " + std::to_string(img.height()) +
                         "\n" + std::to_string(maxval) + "\n";
    if (std::fwrite(header.data(), 1, header.size(), f.get()) != header.size())
        throw FormatError("write failed: '" + path + "'");
    if (bit_depth == 8) {
        if (std::fwrite(interleaved.data(), 1, interleaved.size(), f.get()) !=
            interleaved.size())
            throw FormatError("write failed: '" + path + "'");
        return;
    }
    // interleaved holds native little-endian uint16; PNM wants big-endian
    std::vector<std::uint8_t> be(interleaved.size());
    for (std::size_t i = 0; i + 1 < interleaved.size(); i += 2) {
        be[i] = interleaved[i + 1];
        be[i + 1] = interleaved[i];
    }
    if (std::fwrite(be.data(), 1, be.size(), f.get()) != be.size())
        throw FormatError("write failed: '" + path + "'");
}

// ---- quantization ---------------------------------------------------------

std::vector<std::uint8_t> quantize_interleaved(const Image& img, int bit_depth, bool clamp,
                                               const std::string& path) {
    const std::size_t pixels = img.plane_size();
    const int channels = img.channels();
    const double full = bit_depth == 8 ? 255.0 : 65535.0;
    std::vector<std::uint8_t> out(pixels * channels * (bit_depth / 8));

    for (int c = 0; c < channels; ++c) {
        const float* src = img.plane(c);
        for (std::size_t i = 0; i < pixels; ++i) {
            double v = static_cast<double>(src[i]);
            if (!std::isfinite(v))
                throw DataError("write_image: non-finite sample in '" + path + "'");
            if (clamp) {
                v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            } else if (v < 0.0 || v > 1.0) {
                throw DataError("write_image: sample " + std::to_string(v) +
                                " outside [0,1] in '" + path + "' (use clamp to force)");
            }
            const long q = std::lround(v * full);
            const std::size_t at = (i * channels + static_cast<std::size_t>(c)) *
                                   static_cast<std::size_t>(bit_depth / 8);
            if (bit_depth == 8) {
                out[at] = static_cast<std::uint8_t>(q);
            } else {
                out[at] = static_cast<std::uint8_t>(q & 0xff);
                out[at + 1] = static_cast<std::uint8_t>((q >> 8) & 0xff);
            }
        }
    }
    return out;
}

} // namespace

Image read_image(const std::string& path) {
    FilePtr f = open_file(path, "rb");
    std::uint8_t magic[2] = {0, 0};
    if (std::fread(magic, 1, 2, f.get()) != 2)
        throw FormatError("file too short: '" + path + "'");
    std::rewind(f.get());
    if (magic[0] == 0x89 && magic[1] == 'P')
        return read_png(f.get(), path);
    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6'))
        return read_pnm(f.get(), path);
    throw FormatError("unrecognized image format: '" + path + "'");
}

void write_image(const Image& img, const std::string& path, int bit_depth, bool clamp) {
    if (img.empty())
        throw ParamError("write_image: empty image");
    if (bit_depth != 8 && bit_depth != 16)
        throw ParamError("write_image: bit depth must be 8 or 16");

    std::string ext = std::filesystem::path(path).extension().string();
    for (char& ch : ext)
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));

    const std::vector<std::uint8_t> interleaved = quantize_interleaved(img, bit_depth, clamp, path);
    if (ext == ".png") {
        write_png(img, path, bit_depth, interleaved);
    } else if (ext == ".ppm" || ext == ".pgm") {
        if ((ext == ".ppm") != (img.channels() == 3))
            throw FormatError("channel count does not match PNM format for '" + path + "'");
        write_pnm(img, path, bit_depth, interleaved);
    } else {
        throw FormatError("unsupported output extension for '" + path + "'");
    }
}

Image read_float_dump(const std::string& path) {
    FilePtr f = open_file(path, "rb");
    char header[128];
    if (!std::fgets(header, sizeof header, f.get()))
        throw FormatError("missing DIFD header in '" + path + "'");
    int w = 0, h = 0, c = 0;
    char newline = 0;
    if (std::sscanf(header, "DIFD %d %d %d%c", &w, &h, &c, &newline) != 4 || newline != '\n')
        throw FormatError("malformed DIFD header in '" + path + "'");
    if (w < 1 || h < 1 || (c != 1 && c != 3))
        throw FormatError("invalid DIFD dimensions in '" + path + "'");

    Image img(w, h, c);
    const std::size_t pixels = img.plane_size();
    std::vector<float> interleaved(pixels * static_cast<std::size_t>(c));
    if (std::fread(interleaved.data(), sizeof(float), interleaved.size(), f.get()) !=
        interleaved.size())
        throw FormatError("truncated DIFD payload in '" + path + "'");
    if (std::fgetc(f.get()) != EOF)
        throw FormatError("trailing bytes after DIFD payload in '" + path + "'");

    for (int ch = 0; ch < c; ++ch) {
        float* dst = img.plane(ch);
        for (std::size_t i = 0; i < pixels; ++i)
            dst[i] = interleaved[i * static_cast<std::size_t>(c) + static_cast<std::size_t>(ch)];
    }
    return img;
}

void write_float_dump(const Image& img, const std::string& path) {
    if (img.empty())
        throw ParamError("write_float_dump: empty image");
    FilePtr f = open_file(path, "wb");
    char header[64];
    const int len = std::snprintf(header, sizeof header, "DIFD %d %d %d\n", img.width(),
                                  img.height(), img.channels());
    if (std::fwrite(header, 1, static_cast<std::size_t>(len), f.get()) !=
        static_cast<std::size_t>(len))
        throw FormatError("write failed: '" + path + "'");

    const std::size_t pixels = img.plane_size();
    const int c = img.channels();
    std::vector<float> interleaved(pixels * static_cast<std::size_t>(c));
    for (int ch = 0; ch < c; ++ch) {
        const float* src = img.plane(ch);
        for (std::size_t i = 0; i < pixels; ++i)
            interleaved[i * static_cast<std::size_t>(c) + static_cast<std::size_t>(ch)] = src[i];
    }
    if (std::fwrite(interleaved.data(), sizeof(float), interleaved.size(), f.get()) !=
        interleaved.size())
        throw FormatError("write failed: '" + path + "'");
}

Image load_frame(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    for (char& ch : ext)
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (ext == ".difd")
        return read_float_dump(path);
    return read_image(path);
}

FrameManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open manifest '" + path + "'");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    FrameManifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] == '#') {
            std::istringstream hdr(line.substr(1));
            std::string key;
            double value = 0.0;
            if (hdr >> key >> value && key == "fps")
                m.fps = value;
            continue;
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw FormatError("manifest line " + std::to_string(lineno) +
                              ": expected 'index<TAB>path'");
        int index = 0;
        try {
            std::size_t used = 0;
            index = std::stoi(line.substr(0, tab), &used);
            if (used != tab)
                throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw FormatError("manifest line " + std::to_string(lineno) + ": bad frame index");
        }
        std::string file = line.substr(tab + 1);
        if (file.empty())
            throw FormatError("manifest line " + std::to_string(lineno) + ": empty path");
        if (!m.entries.empty() && index <= m.entries.back().first)
            throw FormatError("manifest line " + std::to_string(lineno) +
                              ": frame indices must be strictly increasing");
        std::filesystem::path p(file);
        if (p.is_relative())
            p = base / p;
        m.entries.emplace_back(index, p.string());
    }
    return m;
}

void write_manifest(const FrameManifest& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot open manifest '" + path + "' for writing");
    if (manifest.fps > 0.0) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "# fps %.9g\n", manifest.fps);
        out << buf;
    }
    for (const auto& [index, file] : manifest.entries)
        out << index << '\t' << file << '\n';
    if (!out)
        throw FormatError("write failed: '" + path + "'");
}

} // namespace difd
