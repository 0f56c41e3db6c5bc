#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lorlut/image.hpp"
#include "lorlut/lowrank.hpp"
#include "lorlut/optim.hpp"

namespace lorlut {

// ---------------------------------------------------------------- .cube

/// TITLE, LUT_3D_SIZE, DOMAIN_MIN/MAX, then G^3 "%.6f %.6f %.6f" rows with red
/// fastest. Entries are clamped to [0,1].
std::string write_cube(const Lut3D& lut, std::string_view title = "lorlut");

/// Accepts '#' comments, TITLE and DOMAIN_MIN/MAX (entries are rescaled to
/// [0,1] when the domain is not the unit cube). Throws FormatError on a
/// missing size, wrong row count, non-numeric data or a 1D LUT.
Lut3D read_cube(std::string_view text);

// ---------------------------------------------------------------- model file

inline constexpr std::string_view kModelMagic = "lorlut-model v1";

struct ModelFile {
    LorLutModel model;
    std::map<std::string, std::string> meta;
};

/// Versioned text format; every number is a hexadecimal float, so a
/// round-trip reproduces the model bit for bit. A K = 0 model writes the
/// "base identity" marker instead of lattice data. Fit metrics from `report`
/// are stored as meta lines; wall time is left out so equal fits give equal files.
std::string write_model(const LorLutModel& m, const FitReport* report = nullptr);
ModelFile parse_model(std::string_view text);
LorLutModel read_model(std::string_view text);

/// JSON sidecar for a fit report (trace + final metrics).
std::string report_to_json(const FitReport& report);

// ---------------------------------------------------------------- images

enum class ImageFormat { ppm, png };

/// Binary PPM (P6, maxval 255) or 8-bit PNG, detected from the magic bytes.
ImageBuffer read_image(std::span<const std::uint8_t> bytes);
/// Samples become round(clamp(v) * 255).
std::vector<std::uint8_t> write_image(const ImageBuffer& img, ImageFormat format);

/// .png -> png, .ppm / .pnm -> ppm; anything else is a FormatError.
ImageFormat format_for_path(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, std::string_view text);

ImageBuffer load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const ImageBuffer& img);

}  // namespace lorlut
