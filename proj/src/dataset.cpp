#include "texfv/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>

namespace texfv {

namespace fs = std::filesystem;

namespace {

bool has_extension(const fs::path& p, std::initializer_list<const char*> exts) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const char* x : exts)
        if (e == x) return true;
    return false;
}

DenseArray gray_from_interleaved(const std::vector<unsigned char>& px, std::size_t h,
                                 std::size_t w, std::size_t channels) {
    DenseArray out({1, h, w});
    for (std::size_t i = 0; i < h * w; ++i) {
        float v;
        if (channels >= 3) {
            // Rec.601 luma.
            v = 0.299f * px[i * channels] + 0.587f * px[i * channels + 1] +
                0.114f * px[i * channels + 2];
        } else {
            v = px[i * channels];
        }
        out[i] = v / 255.0f;
    }
    return out;
}

DenseArray rgb_from_interleaved(const std::vector<unsigned char>& px, std::size_t h,
                                std::size_t w, std::size_t channels) {
    DenseArray out({3, h, w});
    for (std::size_t i = 0; i < h * w; ++i)
        for (std::size_t c = 0; c < 3; ++c) {
            const std::size_t src = channels >= 3 ? c : 0;
            out[c * h * w + i] = px[i * channels + src] / 255.0f;
        }
    return out;
}

DenseArray planes_from_interleaved(const std::vector<unsigned char>& px, std::size_t h,
                                   std::size_t w, std::size_t channels, ColorMode color) {
    return color == ColorMode::gray ? gray_from_interleaved(px, h, w, channels)
                                    : rgb_from_interleaved(px, h, w, channels);
}

DenseArray load_png(const std::string& path, ColorMode color) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw DataError("cannot open image " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError("libpng initialization failed for " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError("corrupt PNG image " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    // Normalize everything to 8-bit RGB or gray.
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    const std::size_t w = png_get_image_width(png, info);
    const std::size_t h = png_get_image_height(png, info);
    const std::size_t channels = png_get_channels(png, info);
    std::vector<unsigned char> px(h * w * channels);
    std::vector<png_bytep> rows(h);
    for (std::size_t r = 0; r < h; ++r) rows[r] = px.data() + r * w * channels;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return planes_from_interleaved(px, h, w, channels, color);
}

void skip_pnm_space(std::istream& in) {
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

DenseArray load_pnm(const std::string& path, ColorMode color) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image " + path);
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    const bool ascii = magic == "P2" || magic == "P3";
    const bool binary = magic == "P5" || magic == "P6";
    if (!ascii && !binary) throw DataError("unsupported PNM magic in " + path);
    const std::size_t channels = (magic == "P3" || magic == "P6") ? 3 : 1;

    std::size_t w, h, maxval;
    skip_pnm_space(in); in >> w;
    skip_pnm_space(in); in >> h;
    skip_pnm_space(in); in >> maxval;
    if (!in || w == 0 || h == 0 || maxval == 0 || maxval > 255)
        throw DataError("bad PNM header in " + path);

    std::vector<unsigned char> px(h * w * channels);
    if (binary) {
        in.get();  // single whitespace after maxval
        in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
        if (!in) throw DataError("truncated PNM image " + path);
    } else {
        for (auto& p : px) {
            unsigned v;
            in >> v;
            if (!in) throw DataError("truncated PNM image " + path);
            p = static_cast<unsigned char>(v);
        }
    }
    if (maxval != 255)
        for (auto& p : px)
            p = static_cast<unsigned char>(p * 255 / maxval);
    return planes_from_interleaved(px, h, w, channels, color);
}

}  // namespace

DenseArray load_image(const std::string& path, ColorMode color) {
    if (has_extension(fs::path(path), {".png"})) return load_png(path, color);
    if (has_extension(fs::path(path), {".ppm", ".pgm", ".pnm"})) return load_pnm(path, color);
    throw DataError("unsupported image format: " + path);
}

void write_pgm(const std::string& path, const DenseArray& image) {
    if (image.rank() != 3 || image.extent(0) != 1)
        throw ValidationError("write_pgm: expects a [1,H,W] grayscale image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "P5\n" << image.extent(2) << " " << image.extent(1) << "\n255\n";
    for (std::size_t i = 0; i < image.size(); ++i) {
        const float v = std::clamp(image[i], 0.0f, 1.0f);
        out.put(static_cast<char>(std::lround(v * 255.0f)));
    }
}

DenseArray resize_bilinear(const DenseArray& image, std::size_t out_h, std::size_t out_w) {
    const std::size_t C = image.extent(0), H = image.extent(1), W = image.extent(2);
    if (out_h == H && out_w == W) return image;
    DenseArray out({C, out_h, out_w});
    const double sy = static_cast<double>(H) / static_cast<double>(out_h);
    const double sx = static_cast<double>(W) / static_cast<double>(out_w);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < out_h; ++i) {
            const double fy = std::max(0.0, (i + 0.5) * sy - 0.5);
            const std::size_t y0 = std::min(static_cast<std::size_t>(fy), H - 1);
            const std::size_t y1 = std::min(y0 + 1, H - 1);
            const double wy = fy - static_cast<double>(y0);
            for (std::size_t j = 0; j < out_w; ++j) {
                const double fx = std::max(0.0, (j + 0.5) * sx - 0.5);
                const std::size_t x0 = std::min(static_cast<std::size_t>(fx), W - 1);
                const std::size_t x1 = std::min(x0 + 1, W - 1);
                const double wx = fx - static_cast<double>(x0);
                const double top = (1.0 - wx) * image.at(c, y0, x0) + wx * image.at(c, y0, x1);
                const double bot = (1.0 - wx) * image.at(c, y1, x0) + wx * image.at(c, y1, x1);
                out.at(c, i, j) = static_cast<float>((1.0 - wy) * top + wy * bot);
            }
        }
    return out;
}

Dataset load_dataset(const DatasetSpec& spec) {
    if (!fs::is_directory(spec.root))
        throw DataError("dataset root is not a directory: " + spec.root);

    std::vector<std::string> classes;
    for (const auto& entry : fs::directory_iterator(spec.root))
        if (entry.is_directory()) classes.push_back(entry.path().filename().string());
    std::sort(classes.begin(), classes.end());
    if (classes.size() < 2)
        throw ValidationError("dataset needs at least 2 class directories, found " +
                              std::to_string(classes.size()));

    std::optional<std::regex> group_re;
    if (!spec.group_regex.empty()) group_re.emplace(spec.group_regex);

    Dataset ds;
    ds.class_names = classes;
    for (std::size_t label = 0; label < classes.size(); ++label) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(fs::path(spec.root) / classes[label]))
            if (entry.is_regular_file() &&
                has_extension(entry.path(), {".png", ".ppm", ".pgm", ".pnm"}))
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.size() < 2)
            throw ValidationError("class '" + classes[label] + "' has fewer than 2 images");

        for (const auto& file : files) {
            ImageRecord rec;
            rec.label = static_cast<int>(label);
            rec.path = (fs::path(classes[label]) / file.filename()).string();
            DenseArray img = load_image(file.string(), spec.color);
            const std::size_t H = img.extent(1), W = img.extent(2);
            std::size_t out_w = spec.resize_width;
            std::size_t out_h = spec.resize_mode == ResizeMode::square
                                    ? spec.resize_width
                                    : std::max<std::size_t>(1, (H * out_w + W / 2) / W);
            rec.image = resize_bilinear(img, out_h, out_w);
            if (group_re) {
                std::smatch match;
                const std::string name = file.filename().string();
                if (std::regex_search(name, match, *group_re) && match.size() > 1)
                    rec.group_id = match[1].str();
            }
            ds.records.push_back(std::move(rec));
        }
    }
    return ds;
}

}  // namespace texfv
