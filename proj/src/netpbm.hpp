#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace framesync::netpbm {

// Grayscale image decoded from a PGM/PPM file, values already divided by
// maxval so every sample lies in [0, 1]. PPM pixels are converted with
// Rec.601 luma weights.
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels; // height * width, row-major

    double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
};

// Supports P2/P5 (PGM) and P3/P6 (PPM), maxval up to 65535, header comments.
// Throws FormatError/IoError naming the file on any problem.
GrayImage read_gray(const std::filesystem::path& path);

} // namespace framesync::netpbm
