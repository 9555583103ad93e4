#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mflab/matrix.hpp"

namespace mflab {

// A labeled dataset with one example per feature row. Pixels are stored
// rescaled to [0, 1]; labels are class indices in [0, num_classes).
struct Dataset {
    Matrix features{0, 0};
    std::vector<int> labels;
    int num_classes = 0;

    index_t size() const { return features.rows; }
    index_t dim() const { return features.cols; }
};

// Reads an IDX image/label file pair (the MNIST container format: big-endian
// magic, big-endian u32 dimensions, then raw unsigned bytes). Images flatten
// to rows of rows*cols doubles scaled by 1/255. Malformed input throws
// format_error carrying the offending byte offset; an image/label count
// mismatch throws format_error against the label file header.
Dataset load_idx(const std::filesystem::path& image_path,
                 const std::filesystem::path& label_path);

// Writers for the same format, used by data generation and round-trip tests.
// Values are clamped to [0, 1] and quantized to bytes.
void write_idx_images(const std::filesystem::path& path, const Matrix& features,
                      index_t image_rows, index_t image_cols);
void write_idx_labels(const std::filesystem::path& path, const std::vector<int>& labels);

}  // namespace mflab
