#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "lorlut/io.hpp"

namespace lorlut {
namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

ImageBuffer from_rgb8(int w, int h, const std::uint8_t* data) {
    ImageBuffer img(w, h);
    const auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = {data[3 * i] / 255.0, data[3 * i + 1] / 255.0, data[3 * i + 2] / 255.0};
    }
    return img;
}

std::vector<std::uint8_t> to_rgb8(const ImageBuffer& img) {
    std::vector<std::uint8_t> out;
    out.reserve(img.size() * 3);
    for (const Rgb& p : img.pixels()) {
        out.push_back(quantize(p.r));
        out.push_back(quantize(p.g));
        out.push_back(quantize(p.b));
    }
    return out;
}

// Header token of a PNM file; skips whitespace and '#' comments.
int pnm_int(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    for (;;) {
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        if (pos < bytes.size() && bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    if (pos >= bytes.size()) throw FormatError("truncated data: PPM header ends early");
    if (!std::isdigit(bytes[pos])) throw FormatError("malformed PPM header");
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        value = value * 10 + (bytes[pos] - '0');
        if (value > (1L << 24)) throw FormatError("PPM header value too large");
        ++pos;
    }
    return static_cast<int>(value);
}

ImageBuffer read_ppm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 2;
    const int w = pnm_int(bytes, pos);
    const int h = pnm_int(bytes, pos);
    const int maxval = pnm_int(bytes, pos);
    if (w <= 0 || h <= 0) throw FormatError("PPM image has zero size");
    if (maxval != 255) throw FormatError("unsupported format: only 8-bit PPM (maxval 255) is supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("truncated data: PPM header ends early");
    ++pos;
    const std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (bytes.size() - pos < need) {
        throw FormatError("truncated data: PPM payload has " + std::to_string(bytes.size() - pos) + " of " +
                          std::to_string(need) + " bytes");
    }
    return from_rgb8(w, h, bytes.data() + pos);
}

struct PngImage {
    png_image img{};
    PngImage() {
        img.version = PNG_IMAGE_VERSION;
    }
    ~PngImage() { png_image_free(&img); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;
};

ImageBuffer read_png(std::span<const std::uint8_t> bytes) {
    PngImage png;
    if (!png_image_begin_read_from_memory(&png.img, bytes.data(), bytes.size())) {
        throw FormatError(std::string("truncated data: PNG decode failed (") + png.img.message + ")");
    }
    png.img.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png.img));
    if (!png_image_finish_read(&png.img, nullptr, buf.data(), 0, nullptr)) {
        throw FormatError(std::string("truncated data: PNG decode failed (") + png.img.message + ")");
    }
    return from_rgb8(static_cast<int>(png.img.width), static_cast<int>(png.img.height), buf.data());
}

std::vector<std::uint8_t> write_png(const ImageBuffer& img) {
    if (img.empty()) throw RangeError("cannot encode an empty image as PNG");
    const std::vector<std::uint8_t> rgb = to_rgb8(img);
    PngImage png;
    png.img.width = static_cast<png_uint_32>(img.width());
    png.img.height = static_cast<png_uint_32>(img.height());
    png.img.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png.img, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
        throw Error(std::string("PNG encode failed: ") + png.img.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&png.img, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
        throw Error(std::string("PNG encode failed: ") + png.img.message);
    }
    out.resize(size);
    return out;
}

}  // namespace

ImageBuffer read_image(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return read_ppm(bytes);
    if (bytes.size() >= 8 && std::equal(std::begin(kPngSignature), std::end(kPngSignature), bytes.begin())) {
        return read_png(bytes);
    }
    throw FormatError("unsupported format: expected binary PPM (P6) or PNG");
}

std::vector<std::uint8_t> write_image(const ImageBuffer& img, ImageFormat format) {
    if (format == ImageFormat::png) return write_png(img);
    const std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::vector<std::uint8_t> rgb = to_rgb8(img);
    out.insert(out.end(), rgb.begin(), rgb.end());
    return out;
}

ImageFormat format_for_path(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") return ImageFormat::png;
    if (ext == ".ppm" || ext == ".pnm") return ImageFormat::ppm;
    throw FormatError("unsupported format: cannot infer image format from '" + path.string() + "'");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

void write_file(const std::filesystem::path& path, std::string_view text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ImageBuffer load_image(const std::filesystem::path& path) { return read_image(read_file_bytes(path)); }

void save_image(const std::filesystem::path& path, const ImageBuffer& img) {
    write_file(path, write_image(img, format_for_path(path)));
}

}  // namespace lorlut
