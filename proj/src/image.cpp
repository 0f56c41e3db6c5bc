#include "lorlut/image.hpp"

#include <string>

namespace lorlut {

ImageBuffer::ImageBuffer(int width, int height, Rgb fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw RangeError("image dimensions must be non-negative");
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<Rgb> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 0 || height < 0) throw RangeError("image dimensions must be non-negative");
    if (pixels_.size() != static_cast<std::size_t>(width) * height) {
        throw DimensionError("pixel count " + std::to_string(pixels_.size()) + " does not match " +
                             std::to_string(width) + "x" + std::to_string(height));
    }
}

}  // namespace lorlut
