#include "mflab/idx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "mflab/errors.hpp"

namespace mflab {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open " + path.string(), 0);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

std::uint32_t get_u32_be(const std::vector<unsigned char>& bytes, std::size_t offset,
                         const std::string& what) {
    if (offset + 4 > bytes.size())
        throw format_error(what + ": truncated header", bytes.size());
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

void put_u32_be(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& image_path,
                 const std::filesystem::path& label_path) {
    const std::vector<unsigned char> img = read_file(image_path);
    const std::string iname = image_path.filename().string();
    if (get_u32_be(img, 0, iname) != kImageMagic)
        throw format_error(iname + ": bad image magic", 0);
    const std::uint64_t n = get_u32_be(img, 4, iname);
    const std::uint64_t rows = get_u32_be(img, 8, iname);
    const std::uint64_t cols = get_u32_be(img, 12, iname);
    const std::uint64_t want = 16 + n * rows * cols;
    if (img.size() != want)
        throw format_error(iname + ": expected " + std::to_string(want) + " bytes, got " +
                               std::to_string(img.size()),
                           std::min<std::uint64_t>(img.size(), want));

    const std::vector<unsigned char> lab = read_file(label_path);
    const std::string lname = label_path.filename().string();
    if (get_u32_be(lab, 0, lname) != kLabelMagic)
        throw format_error(lname + ": bad label magic", 0);
    const std::uint64_t ln = get_u32_be(lab, 4, lname);
    if (ln != n)
        throw format_error(lname + ": " + std::to_string(ln) + " labels for " +
                               std::to_string(n) + " images",
                           4);
    const std::uint64_t lwant = 8 + ln;
    if (lab.size() != lwant)
        throw format_error(lname + ": expected " + std::to_string(lwant) + " bytes, got " +
                               std::to_string(lab.size()),
                           std::min<std::uint64_t>(lab.size(), lwant));

    Dataset ds;
    ds.features = Matrix(static_cast<index_t>(n), static_cast<index_t>(rows * cols));
    const unsigned char* px = img.data() + 16;
    for (std::size_t i = 0; i < ds.features.data.size(); ++i)
        ds.features.data[i] = static_cast<double>(px[i]) / 255.0;
    ds.labels.resize(n);
    int max_label = -1;
    for (std::uint64_t i = 0; i < n; ++i) {
        ds.labels[i] = static_cast<int>(lab[8 + i]);
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.num_classes = max_label + 1;
    return ds;
}

void write_idx_images(const std::filesystem::path& path, const Matrix& features,
                      index_t image_rows, index_t image_cols) {
    if (image_rows < 1 || image_cols < 1 || image_rows * image_cols != features.cols)
        throw param_error("write_idx_images: image shape does not match feature width");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error("cannot open " + path.string() + " for writing");
    put_u32_be(out, kImageMagic);
    put_u32_be(out, static_cast<std::uint32_t>(features.rows));
    put_u32_be(out, static_cast<std::uint32_t>(image_rows));
    put_u32_be(out, static_cast<std::uint32_t>(image_cols));
    std::vector<unsigned char> bytes(features.data.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const double v = std::clamp(features.data[i], 0.0, 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw error("short write to " + path.string());
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error("cannot open " + path.string() + " for writing");
    put_u32_be(out, kLabelMagic);
    put_u32_be(out, static_cast<std::uint32_t>(labels.size()));
    std::vector<unsigned char> bytes(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] > 255)
            throw param_error("write_idx_labels: label " + std::to_string(labels[i]) +
                              " outside byte range");
        bytes[i] = static_cast<unsigned char>(labels[i]);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw error("short write to " + path.string());
}

}  // namespace mflab
