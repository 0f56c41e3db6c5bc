#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lorlut/color.hpp"
#include "lorlut/error.hpp"

namespace lorlut {

/// Row-major H x W grid of normalized RGB pixels.
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(int width, int height, Rgb fill = {});
    ImageBuffer(int width, int height, std::vector<Rgb> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }
    bool empty() const { return pixels_.empty(); }

    Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    const Rgb& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<Rgb> pixels() { return pixels_; }
    std::span<const Rgb> pixels() const { return pixels_; }

    bool same_shape(const ImageBuffer& o) const { return width_ == o.width_ && height_ == o.height_; }
    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
};

inline void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(what) + ": image dimensions differ (" + std::to_string(a.width()) + "x" +
                             std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                             std::to_string(b.height()) + ")");
    }
}

}  // namespace lorlut
