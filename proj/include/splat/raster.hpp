#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace splat {

/// Row-major raster of real pixel values, 1 or 3 channels.
/// Values are nominally in [0,1]; gradient fields may exceed that range.
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, int channels, double fill = 0.0)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<size_t>(width) * height * channels, fill) {
        if (width < 1 || height < 1)
            throw std::invalid_argument("Raster: width and height must be >= 1");
        if (channels != 1 && channels != 3)
            throw std::invalid_argument("Raster: channels must be 1 or 3");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    size_t size() const { return data_.size(); }

    double& at(int x, int y, int c = 0) {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }
    double at(int x, int y, int c = 0) const {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }

    /// Clamped accessor for replicate-padding borders.
    double at_clamped(int x, int y, int c = 0) const {
        if (x < 0) x = 0;
        if (x >= width_) x = width_ - 1;
        if (y < 0) y = 0;
        if (y >= height_) y = height_ - 1;
        return at(x, y, c);
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_dims(const Raster& o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }
    bool same_spatial(const Raster& o) const {
        return width_ == o.width_ && height_ == o.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// 3x3 convolution kernel, row-major coefficients.
struct Kernel3x3 {
    double k[9];

    double at(int dy, int dx) const { return k[(dy + 1) * 3 + (dx + 1)]; }
};

/// Per-pixel boolean mask, true = object.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false)
        : width_(width), height_(height),
          bits_(static_cast<size_t>(width) * height, fill) {
        if (width < 1 || height < 1)
            throw std::invalid_argument("BinaryMask: width and height must be >= 1");
    }

    int width() const { return width_; }
    int height() const { return height_; }

    bool at(int x, int y) const { return bits_[static_cast<size_t>(y) * width_ + x]; }
    void set(int x, int y, bool v) { bits_[static_cast<size_t>(y) * width_ + x] = v; }

    size_t count_true() const {
        size_t n = 0;
        for (bool b : bits_) n += b ? 1 : 0;
        return n;
    }

    const std::vector<bool>& bits() const { return bits_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<bool> bits_;
};

}  // namespace splat
