#ifndef SNIPS_IMAGE_IO_HPP
#define SNIPS_IMAGE_IO_HPP

// 8-bit PNG in/out via libpng's simplified API. Pixels map linearly to [0, 1]; values are
// clamped and rounded half-to-even only when written.

#include "core.hpp"

#include <png.h>

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <string>
#include <vector>

namespace snips {

/// Planar image: one length-(width·height) row-major vector per channel (1 = gray, 3 = RGB).
struct Image {
    Index width = 0;
    Index height = 0;
    std::vector<Vector> channels;

    Index pixels() const noexcept { return width * height; }
    int channel_count() const noexcept { return static_cast<int>(channels.size()); }

    static Image blank(Index width, Index height, int channel_count) {
        if (width < 1 || height < 1) throw ArgumentError("image: dimensions must be positive");
        if (channel_count != 1 && channel_count != 3) throw ArgumentError("image: 1 or 3 channels supported");
        Image im{width, height, {}};
        im.channels.assign(static_cast<std::size_t>(channel_count), Vector::Zero(width * height));
        return im;
    }

    /// Channels stacked end to end.
    Vector flattened() const {
        Vector out(pixels() * channel_count());
        for (int c = 0; c < channel_count(); ++c) out.segment(c * pixels(), pixels()) = channels[static_cast<std::size_t>(c)];
        return out;
    }
};

inline Image read_png(const std::string& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw std::runtime_error("cannot read PNG '" + path + "': " + img.message);
    const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
    img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw std::runtime_error("cannot decode PNG '" + path + "': " + msg);
    }
    const int nc = color ? 3 : 1;
    Image out = Image::blank(img.width, img.height, nc);
    for (Index p = 0; p < out.pixels(); ++p)
        for (int c = 0; c < nc; ++c)
            out.channels[static_cast<std::size_t>(c)][p] = buf[static_cast<std::size_t>(p * nc + c)] / 255.0;
    return out;
}

/// Round-half-even quantization of a [0, 1] value to 8 bits.
inline png_byte quantize8(double v) {
    if (!std::isfinite(v)) v = 0.0;
    const double scaled = std::clamp(v, 0.0, 1.0) * 255.0;
    const int old = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double r = std::nearbyint(scaled);
    std::fesetround(old);
    return static_cast<png_byte>(r);
}

inline void write_png(const std::string& path, const Image& im) {
    const int nc = im.channel_count();
    if (nc != 1 && nc != 3) throw ArgumentError("write_png: 1 or 3 channels supported");
    std::vector<png_byte> buf(static_cast<std::size_t>(im.pixels() * nc));
    for (Index p = 0; p < im.pixels(); ++p)
        for (int c = 0; c < nc; ++c)
            buf[static_cast<std::size_t>(p * nc + c)] = quantize8(im.channels[static_cast<std::size_t>(c)][p]);
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(im.width);
    img.height = static_cast<png_uint_32>(im.height);
    img.format = nc == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr))
        throw std::runtime_error("cannot write PNG '" + path + "': " + img.message);
}

} // namespace snips

#endif // SNIPS_IMAGE_IO_HPP
