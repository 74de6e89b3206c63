#include "splat/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace splat {

namespace {

uint8_t to_byte(double v) {
    double s = std::lround(v * 255.0);
    return static_cast<uint8_t>(std::clamp(s, 0.0, 255.0));
}

std::string lower_ext(const std::string& path) {
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    return ext;
}

struct FileCloser {
    void operator()(FILE* f) const { if (f) fclose(f); }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

// Skips PNM whitespace and '#' comments between header tokens.
int read_pnm_int(std::istream& in) {
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
        } else if (!std::isspace(c)) {
            in.unget();
            break;
        }
    }
    int v = -1;
    in >> v;
    return v;
}

}  // namespace

Raster load_image(const std::string& path) {
    std::string ext = lower_ext(path);
    if (ext == "png") return load_png(path);
    if (ext == "ppm" || ext == "pgm") return load_pnm(path);
    if (ext == "pfm") return load_pfm(path);
    throw std::runtime_error("load_image: unsupported extension: " + path);
}

void save_image(const Raster& img, const std::string& path) {
    std::string ext = lower_ext(path);
    if (ext == "png") { save_png(img, path); return; }
    if (ext == "ppm" || ext == "pgm") { save_pnm(img, path); return; }
    if (ext == "pfm") { save_pfm(img, path); return; }
    throw std::runtime_error("save_image: unsupported extension: " + path);
}

Raster load_png(const std::string& path) {
    FilePtr fp(fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("load_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("load_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("load_png: decode error in " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("load_png: unsupported channel count in " + path);
    }

    std::vector<uint8_t> row(static_cast<size_t>(w) * channels);
    Raster img(static_cast<int>(w), static_cast<int>(h), channels);
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(static_cast<int>(x), static_cast<int>(y), c) =
                    row[x * channels + c] / 255.0;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_png(const Raster& img, const std::string& path) {
    FilePtr fp(fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("save_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("save_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("save_png: encode error for " + path);
    }
    png_init_io(png, fp.get());
    int color = img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, img.width(), img.height(), 8, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(static_cast<size_t>(img.width()) * img.channels());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c)
                row[static_cast<size_t>(x) * img.channels() + c] = to_byte(img.at(x, y, c));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Raster load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_pnm: cannot open " + path);
    std::string magic;
    in >> magic;
    int channels;
    if (magic == "P6") channels = 3;
    else if (magic == "P5") channels = 1;
    else throw std::runtime_error("load_pnm: bad magic in " + path);

    int w = read_pnm_int(in);
    int h = read_pnm_int(in);
    int maxval = read_pnm_int(in);
    if (w < 1 || h < 1 || maxval != 255)
        throw std::runtime_error("load_pnm: unsupported header in " + path);
    in.get();  // single whitespace before payload

    std::vector<uint8_t> buf(static_cast<size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<size_t>(in.gcount()) != buf.size())
        throw std::runtime_error("load_pnm: truncated payload in " + path);

    Raster img(w, h, channels);
    for (size_t i = 0; i < buf.size(); ++i)
        img.data()[i] = buf[i] / 255.0;
    return img;
}

void save_pnm(const Raster& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_pnm: cannot open " + path);
    out << (img.channels() == 3 ? "P6" : "P5") << "\n"
        << img.width() << " " << img.height() << "\n255\n";
    std::vector<uint8_t> buf(img.size());
    for (size_t i = 0; i < img.size(); ++i)
        buf[i] = to_byte(img.data()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

BinaryMask load_mask_pgm(const std::string& path) {
    Raster img = load_pnm(path);
    if (img.channels() != 1)
        throw std::runtime_error("load_mask_pgm: mask must be single-channel: " + path);
    BinaryMask m(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            m.set(x, y, img.at(x, y) >= 0.5);
    return m;
}

void save_mask_pgm(const BinaryMask& mask, const std::string& path) {
    Raster img(mask.width(), mask.height(), 1);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            img.at(x, y) = mask.at(x, y) ? 1.0 : 0.0;
    save_pnm(img, path);
}

Raster load_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_pfm: cannot open " + path);
    std::string magic;
    in >> magic;
    int channels;
    if (magic == "Pf") channels = 1;
    else if (magic == "PF") channels = 3;
    else throw std::runtime_error("load_pfm: bad magic in " + path);
    int w, h;
    double scale;
    in >> w >> h >> scale;
    in.get();
    if (w < 1 || h < 1 || scale >= 0)
        throw std::runtime_error("load_pfm: unsupported header in " + path);

    std::vector<float> buf(static_cast<size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (static_cast<size_t>(in.gcount()) != buf.size() * sizeof(float))
        throw std::runtime_error("load_pfm: truncated payload in " + path);

    // PFM rows are stored bottom-to-top.
    Raster img(w, h, channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(x, y, c) = buf[(static_cast<size_t>(h - 1 - y) * w + x) * channels + c];
    return img;
}

void save_pfm(const Raster& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_pfm: cannot open " + path);
    out << (img.channels() == 3 ? "PF" : "Pf") << "\n"
        << img.width() << " " << img.height() << "\n-1.0\n";
    std::vector<float> buf(img.size());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c)
                buf[(static_cast<size_t>(img.height() - 1 - y) * img.width() + x) * img.channels() + c] =
                    static_cast<float>(img.at(x, y, c));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

}  // namespace splat
