#include "netpbm.hpp"

#include <cctype>
#include <fstream>
#include <string>

#include "framesync/errors.hpp"

namespace framesync::netpbm {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& is) {
    std::string tok;
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = is.get();
        } else if (std::isspace(c)) {
            c = is.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = is.get();
    }
    return tok;
}

std::size_t parse_count(const std::string& tok, const std::filesystem::path& path,
                        const char* what) {
    if (tok.empty()) throw FormatError(path.string() + ": missing " + std::string(what));
    std::size_t value = 0;
    for (char ch : tok) {
        if (!std::isdigit(static_cast<unsigned char>(ch)))
            throw FormatError(path.string() + ": bad " + std::string(what) + " '" + tok + "'");
        value = value * 10 + static_cast<std::size_t>(ch - '0');
    }
    return value;
}

} // namespace

GrayImage read_gray(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open image " + path.string());

    const std::string magic = next_token(is);
    const bool pgm = magic == "P2" || magic == "P5";
    const bool ppm = magic == "P3" || magic == "P6";
    if (!pgm && !ppm)
        throw FormatError(path.string() + ": unsupported netpbm magic '" + magic + "'");
    const bool ascii = magic == "P2" || magic == "P3";

    const std::size_t width = parse_count(next_token(is), path, "width");
    const std::size_t height = parse_count(next_token(is), path, "height");
    const std::size_t maxval = parse_count(next_token(is), path, "maxval");
    if (width == 0 || height == 0)
        throw FormatError(path.string() + ": zero image dimension");
    if (maxval == 0 || maxval > 65535)
        throw FormatError(path.string() + ": maxval out of range");

    const std::size_t channels = ppm ? 3 : 1;
    const std::size_t n_samples = width * height * channels;
    std::vector<double> samples(n_samples);

    if (ascii) {
        for (std::size_t i = 0; i < n_samples; ++i) {
            const std::size_t v = parse_count(next_token(is), path, "sample");
            if (v > maxval) throw FormatError(path.string() + ": sample exceeds maxval");
            samples[i] = static_cast<double>(v);
        }
    } else {
        // Binary payload starts right after the single whitespace ending the
        // header; two bytes per sample (big-endian) when maxval > 255.
        const std::size_t bytes_per = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(n_samples * bytes_per);
        if (!is.read(reinterpret_cast<char*>(raw.data()),
                     static_cast<std::streamsize>(raw.size())))
            throw FormatError(path.string() + ": truncated pixel data");
        for (std::size_t i = 0; i < n_samples; ++i) {
            std::size_t v = bytes_per == 1
                                ? raw[i]
                                : (static_cast<std::size_t>(raw[2 * i]) << 8) | raw[2 * i + 1];
            if (v > maxval) throw FormatError(path.string() + ": sample exceeds maxval");
            samples[i] = static_cast<double>(v);
        }
    }

    GrayImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(width * height);
    const double scale = 1.0 / static_cast<double>(maxval);
    if (pgm) {
        for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = samples[i] * scale;
    } else {
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            const double r = samples[3 * i], g = samples[3 * i + 1], b = samples[3 * i + 2];
            img.pixels[i] = (0.299 * r + 0.587 * g + 0.114 * b) * scale;
        }
    }
    return img;
}

} // namespace framesync::netpbm
