#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "texfv/dense_array.hpp"

namespace texfv {

enum class ResizeMode { fixed_width_keep_aspect, square };
enum class ColorMode { rgb, gray };

struct DatasetSpec {
    std::string root;                 // one subdirectory per class
    std::size_t resize_width = 320;
    ResizeMode resize_mode = ResizeMode::fixed_width_keep_aspect;
    ColorMode color = ColorMode::rgb;
    std::string group_regex;          // first capture group = sample id (optional)
};

struct ImageRecord {
    DenseArray image;      // [C,H,W] intensities in [0,1]
    int label = 0;
    std::string group_id;  // empty unless group_regex matched
    std::string path;      // relative to the dataset root
};

struct Dataset {
    std::vector<ImageRecord> records;
    std::vector<std::string> class_names;  // index = label
};

/// Decodes PNG/PPM/PGM, resizes, scales to [0,1]; deterministic
/// lexicographic ordering of classes and files.
Dataset load_dataset(const DatasetSpec& spec);

/// Decode a single image file to [C,H,W] in [0,1].
DenseArray load_image(const std::string& path, ColorMode color);

/// Write a grayscale [1,H,W] image as binary PGM (for synthetic corpora).
void write_pgm(const std::string& path, const DenseArray& image);

/// Bilinear resize to [C,Ho,Wo].
DenseArray resize_bilinear(const DenseArray& image, std::size_t out_h, std::size_t out_w);

}  // namespace texfv
