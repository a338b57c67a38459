#include "framesync/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "framesync/rng.hpp"
#include "binio.hpp"
#include "netpbm.hpp"

namespace framesync {

namespace fs = std::filesystem;

void EmbeddingSequence::validate() const {
    if (frames == 0) throw ArgError("embedding sequence has zero frames");
    if (dim == 0) throw ArgError("embedding sequence has zero dim");
    if (values.size() != frames * dim)
        throw ArgError("embedding sequence has " + std::to_string(values.size()) +
                       " values, expected " + std::to_string(frames * dim));
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw ArgError("non-finite embedding value at row " + std::to_string(i / dim));
    if (!(fps > 0.0)) throw ArgError("fps must be positive");
}

namespace {

constexpr char kEseqMagic[4] = {'E', 'S', 'E', 'Q'};
constexpr std::uint32_t kEseqVersion = 1;

bool has_csv_extension(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".csv";
}

EmbeddingSequence read_csv(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());

    EmbeddingSequence seq;
    seq.source_id = path.filename().string();
    std::string line;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        if (line.empty() && is.eof()) break;
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(cell, &pos);
                while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos])))
                    ++pos;
                if (pos != cell.size()) throw std::invalid_argument("trailing junk");
                fields.push_back(v);
            } catch (const std::exception&) {
                throw FormatError(path.string() + ": bad value '" + cell + "' at row " +
                                  std::to_string(row));
            }
        }
        if (fields.empty())
            throw FormatError(path.string() + ": empty row " + std::to_string(row));
        if (row == 0) {
            seq.dim = fields.size();
        } else if (fields.size() != seq.dim) {
            throw FormatError(path.string() + ": row " + std::to_string(row) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(seq.dim));
        }
        for (double v : fields) {
            if (!std::isfinite(v))
                throw FormatError(path.string() + ": non-finite value at row " +
                                  std::to_string(row));
            seq.values.push_back(v);
        }
        ++row;
    }
    if (row == 0) throw FormatError(path.string() + ": zero frames");
    seq.frames = row;
    return seq;
}

void write_csv(const EmbeddingSequence& seq, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os.precision(17);
    for (std::size_t f = 0; f < seq.frames; ++f) {
        for (std::size_t d = 0; d < seq.dim; ++d) {
            if (d) os << ',';
            os << seq.at(f, d);
        }
        os << '\n';
    }
    if (!os) throw IoError("write failed for " + path.string());
}

} // namespace

EmbeddingSequence read_eseq(const fs::path& path) {
    if (has_csv_extension(path)) return read_csv(path);

    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());

    char magic[4];
    if (!is.read(magic, 4))
        throw FormatError(path.string() + ": truncated header at byte 0");
    if (std::memcmp(magic, kEseqMagic, 4) != 0)
        throw FormatError(path.string() + ": bad magic at byte 0 (expected ESEQ)");

    std::uint32_t version = 0, frames = 0, dim = 0;
    float fps = 0.0f;
    if (!binio::get_u32(is, version))
        throw FormatError(path.string() + ": truncated header at byte 4");
    if (version != kEseqVersion)
        throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
    if (!binio::get_u32(is, frames))
        throw FormatError(path.string() + ": truncated header at byte 8");
    if (!binio::get_u32(is, dim))
        throw FormatError(path.string() + ": truncated header at byte 12");
    if (!binio::get_f32(is, fps))
        throw FormatError(path.string() + ": truncated header at byte 16");
    if (frames == 0) throw FormatError(path.string() + ": zero frames");
    if (dim == 0) throw FormatError(path.string() + ": zero dim");
    if (!(fps > 0.0f) || !std::isfinite(fps))
        throw FormatError(path.string() + ": bad fps value");

    EmbeddingSequence seq;
    seq.frames = frames;
    seq.dim = dim;
    seq.fps = static_cast<double>(fps);
    seq.source_id = path.filename().string();
    seq.values.resize(static_cast<std::size_t>(frames) * dim);
    for (std::size_t i = 0; i < seq.values.size(); ++i) {
        float v;
        if (!binio::get_f32(is, v))
            throw FormatError(path.string() + ": truncated payload at byte " +
                              std::to_string(20 + i * 4));
        if (!std::isfinite(v))
            throw FormatError(path.string() + ": non-finite value at row " +
                              std::to_string(i / dim));
        seq.values[i] = static_cast<double>(v);
    }
    return seq;
}

void write_eseq(const EmbeddingSequence& seq, const fs::path& path) {
    seq.validate();
    if (has_csv_extension(path)) {
        write_csv(seq, path);
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os.write(kEseqMagic, 4);
    binio::put_u32(os, kEseqVersion);
    binio::put_u32(os, static_cast<std::uint32_t>(seq.frames));
    binio::put_u32(os, static_cast<std::uint32_t>(seq.dim));
    binio::put_f32(os, static_cast<float>(seq.fps));
    for (double v : seq.values) binio::put_f32(os, static_cast<float>(v));
    if (!os) throw IoError("write failed for " + path.string());
}

namespace {

constexpr std::size_t kGridSide = 16;
constexpr std::size_t kGridCells = kGridSide * kGridSide;

// Exact box filter: output cell (r, c) integrates the image over
// [r*H/16, (r+1)*H/16) x [c*W/16, (c+1)*W/16) and divides by the cell area.
std::vector<double> downsample_grid(const netpbm::GrayImage& img) {
    std::vector<double> grid(kGridCells, 0.0);
    const double cell_h = static_cast<double>(img.height) / kGridSide;
    const double cell_w = static_cast<double>(img.width) / kGridSide;
    for (std::size_t r = 0; r < kGridSide; ++r) {
        const double y0 = r * cell_h, y1 = (r + 1) * cell_h;
        const auto iy0 = static_cast<std::size_t>(y0);
        const auto iy1 = std::min(img.height, static_cast<std::size_t>(std::ceil(y1)));
        for (std::size_t c = 0; c < kGridSide; ++c) {
            const double x0 = c * cell_w, x1 = (c + 1) * cell_w;
            const auto ix0 = static_cast<std::size_t>(x0);
            const auto ix1 = std::min(img.width, static_cast<std::size_t>(std::ceil(x1)));
            double acc = 0.0;
            for (std::size_t iy = iy0; iy < iy1; ++iy) {
                const double wy = std::min(y1, static_cast<double>(iy + 1)) -
                                  std::max(y0, static_cast<double>(iy));
                for (std::size_t ix = ix0; ix < ix1; ++ix) {
                    const double wx = std::min(x1, static_cast<double>(ix + 1)) -
                                      std::max(x0, static_cast<double>(ix));
                    acc += wy * wx * img.at(iy, ix);
                }
            }
            grid[r * kGridSide + c] = acc / (cell_h * cell_w);
        }
    }
    return grid;
}

bool is_netpbm_file(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

} // namespace

EmbeddingSequence extract_pixel_features(const fs::path& frame_dir, bool with_temporal_diff) {
    if (!fs::is_directory(frame_dir))
        throw IoError("not a directory: " + frame_dir.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(frame_dir))
        if (entry.is_regular_file() && is_netpbm_file(entry.path())) files.push_back(entry.path());
    if (files.empty())
        throw ArgError("no PGM/PPM frames in " + frame_dir.string());
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
    });

    EmbeddingSequence seq;
    seq.frames = files.size();
    seq.dim = with_temporal_diff ? 2 * kGridCells : kGridCells;
    seq.source_id = frame_dir.filename().string();
    seq.values.resize(seq.frames * seq.dim);

    std::size_t width = 0, height = 0;
    std::vector<double> prev;
    for (std::size_t f = 0; f < files.size(); ++f) {
        const netpbm::GrayImage img = netpbm::read_gray(files[f]);
        if (f == 0) {
            width = img.width;
            height = img.height;
        } else if (img.width != width || img.height != height) {
            throw FormatError("frame size mismatch in " + files[f].string() + " (" +
                              std::to_string(img.width) + "x" + std::to_string(img.height) +
                              " vs " + std::to_string(width) + "x" + std::to_string(height) + ")");
        }
        const std::vector<double> grid = downsample_grid(img);
        for (std::size_t i = 0; i < kGridCells; ++i) seq.at(f, i) = grid[i];
        if (with_temporal_diff) {
            for (std::size_t i = 0; i < kGridCells; ++i)
                seq.at(f, kGridCells + i) = (f == 0) ? 0.0 : grid[i] - prev[i];
        }
        prev = grid;
    }
    return seq;
}

EmbeddingSequence sliding_window_pool(const EmbeddingSequence& seq, std::size_t window) {
    seq.validate();
    if (window == 0) throw ArgError("window must be at least 1");
    if (window > seq.frames)
        throw ArgError("window " + std::to_string(window) + " exceeds frame count " +
                       std::to_string(seq.frames));

    EmbeddingSequence out;
    out.frames = seq.frames - window + 1;
    out.dim = seq.dim;
    out.fps = seq.fps;
    out.source_id = seq.source_id;
    out.values.resize(out.frames * out.dim);
    const double inv = 1.0 / static_cast<double>(window);
    for (std::size_t f = 0; f < out.frames; ++f) {
        for (std::size_t d = 0; d < seq.dim; ++d) {
            double acc = 0.0;
            for (std::size_t w = 0; w < window; ++w) acc += seq.at(f + w, d);
            out.at(f, d) = acc * inv;
        }
    }
    return out;
}

EmbeddingSequence noise_substitute(const EmbeddingSequence& seq, std::uint64_t seed) {
    seq.validate();
    const std::size_t n = seq.values.size();

    double mean = 0.0;
    for (double v : seq.values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : seq.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);

    EmbeddingSequence out;
    out.frames = seq.frames;
    out.dim = seq.dim;
    out.fps = seq.fps;
    out.source_id = seq.source_id;
    out.values.resize(n);

    if (var == 0.0) {
        std::fill(out.values.begin(), out.values.end(), mean);
        return out;
    }

    Rng rng(mix_seed(seed, 0x6e6f6973ULL)); // "nois"
    for (double& v : out.values) v = rng.gaussian();

    // Affine rescale so the sample moments match the input exactly (up to
    // double rounding).
    double smean = 0.0;
    for (double v : out.values) smean += v;
    smean /= static_cast<double>(n);
    double svar = 0.0;
    for (double v : out.values) svar += (v - smean) * (v - smean);
    svar /= static_cast<double>(n);
    const double scale = std::sqrt(var / svar);
    for (double& v : out.values) v = mean + (v - smean) * scale;
    return out;
}

} // namespace framesync
