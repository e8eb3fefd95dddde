#include "ftdr/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace ftdr::io {

namespace {

struct Cursor {
    const std::string& bytes;
    size_t pos = 0;

    int peek() const { return pos < bytes.size() ? static_cast<unsigned char>(bytes[pos]) : -1; }
    int get() { return pos < bytes.size() ? static_cast<unsigned char>(bytes[pos++]) : -1; }

    // Whitespace and '#' comments between header tokens.
    void skip_separators() {
        while (pos < bytes.size()) {
            int c = peek();
            if (c == '#') {
                while (pos < bytes.size() && get() != '\n') {
                }
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }

    int read_uint(const char* what) {
        skip_separators();
        size_t start = pos;
        long v = 0;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 30) throw ParseError(std::string("overflow reading ") + what,
                                              static_cast<long>(start));
            ++pos;
        }
        if (pos == start)
            throw ParseError(std::string("expected ") + what, static_cast<long>(pos));
        return static_cast<int>(v);
    }
};

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Image load_pnm(const std::string& path) {
    std::string bytes = slurp(path);
    Cursor cur{bytes};
    if (cur.get() != 'P') throw ParseError("missing PNM magic in " + path, 0);
    int kind = cur.get();
    if (kind != '5' && kind != '6')
        throw ParseError("unsupported PNM type in " + path + " (want P5 or P6)", 1);
    int channels = kind == '6' ? 3 : 1;
    int w = cur.read_uint("width");
    int h = cur.read_uint("height");
    long maxval_at = static_cast<long>(cur.pos);
    int maxval = cur.read_uint("maxval");
    if (maxval != 255)
        throw ParseError("unsupported maxval " + std::to_string(maxval) + " in " + path +
                             " (only 255)",
                         maxval_at);
    int c = cur.get();  // single whitespace byte before the raster
    if (c != ' ' && c != '\t' && c != '\r' && c != '\n')
        throw ParseError("missing raster separator in " + path, static_cast<long>(cur.pos - 1));
    size_t need = static_cast<size_t>(w) * h * channels;
    if (bytes.size() - cur.pos < need)
        throw ParseError("truncated raster in " + path + " (need " + std::to_string(need) +
                             " bytes)",
                         static_cast<long>(cur.pos));
    Image img({h, w, channels});
    double* dst = img.data();
    const unsigned char* src = reinterpret_cast<const unsigned char*>(bytes.data()) + cur.pos;
    for (size_t i = 0; i < need; ++i) dst[i] = src[i] / 255.0;
    return img;
}

}  // namespace

Image load_image(const std::string& path) { return load_pnm(path); }

void save_image(const std::string& path, const Image& image) {
    check_image(image, "save_image");
    int h = image.shape()[0], w = image.shape()[1], c = image.shape()[2];
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write file: " + path);
    f << (c == 3 ? "P6" : "P5") << "\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> raster(static_cast<size_t>(h) * w * c);
    const double* src = image.data();
    for (size_t i = 0; i < raster.size(); ++i) {
        double v = std::floor(src[i] * 255.0 + 0.5);
        raster[i] = static_cast<unsigned char>(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v));
    }
    f.write(reinterpret_cast<const char*>(raster.data()), static_cast<long>(raster.size()));
}

BinaryMask load_mask(const std::string& path) {
    Image img = load_pnm(path);
    if (img.shape()[2] != 1) throw ContractError("mask file must be P5 grayscale: " + path);
    int h = img.shape()[0], w = img.shape()[1];
    BinaryMask mask({h, w});
    for (int64_t i = 0; i < mask.numel(); ++i) mask[i] = img[i] >= 0.5 ? 1.0 : 0.0;
    return mask;
}

void save_mask(const std::string& path, const BinaryMask& mask) {
    check_binary_mask(mask, "save_mask");
    Image img = reshape(mask, {mask.shape()[0], mask.shape()[1], 1});
    save_image(path, img);
}

void save_heatmap(const std::string& path, const Tensor& map) {
    if (map.rank() != 2) throw ShapeError("save_heatmap expects (H, W)");
    double lo = map[0], hi = map[0];
    for (int64_t i = 0; i < map.numel(); ++i) {
        lo = std::min(lo, map[i]);
        hi = std::max(hi, map[i]);
    }
    Image img({map.shape()[0], map.shape()[1], 1});
    double span = hi - lo;
    for (int64_t i = 0; i < map.numel(); ++i)
        img[i] = span > 0.0 ? (map[i] - lo) / span : 0.0;
    save_image(path, img);
}

std::string read_text_file(const std::string& path) { return slurp(path); }

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write file: " + path);
    f.write(content.data(), static_cast<long>(content.size()));
}

}  // namespace ftdr::io
