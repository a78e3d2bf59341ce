#include "smorph/png_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>

namespace smorph {

namespace {

const uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

uint32_t crc32_of(const uint8_t* data, size_t n) {
    return uint32_t(::crc32(0L, data, uInt(n)));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

uint32_t get_u32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) |
           uint32_t(p[3]);
}

void append_chunk(std::vector<uint8_t>& out, const char type[4],
                  const std::vector<uint8_t>& payload) {
    put_u32(out, uint32_t(payload.size()));
    size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    out.reserve(out.size() + 4);
    put_u32(out, crc32_of(out.data() + crc_start, out.size() - crc_start));
}

std::vector<uint8_t> zlib_compress(const std::vector<uint8_t>& raw) {
    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<uint8_t> out(bound);
    if (compress2(out.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw DataError("png: deflate failed");
    out.resize(bound);
    return out;
}

std::vector<uint8_t> zlib_decompress(const std::vector<uint8_t>& comp, size_t expected) {
    std::vector<uint8_t> out(expected);
    uLongf out_len = uLongf(expected);
    int rc = uncompress(out.data(), &out_len, comp.data(), uLong(comp.size()));
    if (rc != Z_OK || out_len != expected) throw DataError("png: inflate failed");
    return out;
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

struct RawPng {
    int height = 0, width = 0, channels = 0;
    std::vector<uint8_t> pixels;  // interleaved
};

RawPng decode_png_bytes(const std::vector<uint8_t>& file, const std::string& path) {
    if (file.size() < 8 || std::memcmp(file.data(), kPngSignature, 8) != 0)
        throw DataError("not a PNG file: " + path);
    RawPng out;
    int bit_depth = 0, color_type = -1, interlace = 0;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    while (pos + 8 <= file.size()) {
        uint32_t len = get_u32(file.data() + pos);
        if (pos + 12 + len > file.size()) throw DataError("png: truncated chunk in " + path);
        const char* type = reinterpret_cast<const char*>(file.data() + pos + 4);
        const uint8_t* payload = file.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw DataError("png: bad IHDR in " + path);
            out.width = int(get_u32(payload));
            out.height = int(get_u32(payload + 4));
            bit_depth = payload[8];
            color_type = payload[9];
            interlace = payload[12];
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (out.width <= 0 || out.height <= 0) throw DataError("png: missing IHDR in " + path);
    if (bit_depth != 8) throw DataError("png: only 8-bit depth supported: " + path);
    if (interlace != 0) throw DataError("png: interlaced files not supported: " + path);
    if (color_type == 0) out.channels = 1;
    else if (color_type == 2) out.channels = 3;
    else throw DataError("png: only grayscale/RGB supported: " + path);

    const size_t stride = size_t(out.width) * out.channels;
    const size_t raw_size = (stride + 1) * out.height;
    std::vector<uint8_t> raw = zlib_decompress(idat, raw_size);

    out.pixels.resize(stride * out.height);
    const int bpp = out.channels;
    std::vector<uint8_t> prev(stride, 0);
    for (int y = 0; y < out.height; ++y) {
        const uint8_t* src = raw.data() + size_t(y) * (stride + 1);
        uint8_t filter = src[0];
        ++src;
        uint8_t* dst = out.pixels.data() + size_t(y) * stride;
        for (size_t x = 0; x < stride; ++x) {
            int a = x >= size_t(bpp) ? dst[x - bpp] : 0;
            int b = prev[x];
            int c = x >= size_t(bpp) ? prev[x - bpp] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw DataError("png: bad filter byte in " + path);
            }
            dst[x] = uint8_t(v);
        }
        std::memcpy(prev.data(), dst, stride);
    }
    return out;
}

RawPng read_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open PNG: " + path);
    std::vector<uint8_t> file((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    return decode_png_bytes(file, path);
}

void write_raw(const std::string& path, int height, int width, int channels,
               const std::vector<uint8_t>& pixels) {
    const size_t stride = size_t(width) * channels;
    std::vector<uint8_t> raw;
    raw.reserve((stride + 1) * height);
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);  // filter: none
        raw.insert(raw.end(), pixels.begin() + size_t(y) * stride,
                   pixels.begin() + size_t(y + 1) * stride);
    }
    std::vector<uint8_t> idat = zlib_compress(raw);

    std::vector<uint8_t> out(kPngSignature, kPngSignature + 8);
    std::vector<uint8_t> ihdr;
    put_u32(ihdr, uint32_t(width));
    put_u32(ihdr, uint32_t(height));
    ihdr.push_back(8);                              // bit depth
    ihdr.push_back(channels == 1 ? 0 : 2);          // color type
    ihdr.push_back(0);                              // compression
    ihdr.push_back(0);                              // filter
    ihdr.push_back(0);                              // interlace
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", idat);
    append_chunk(out, "IEND", {});

    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write PNG: " + path);
    os.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
    if (!os) throw DataError("short write on PNG: " + path);
}

}  // namespace

ImageCrop read_png(const std::string& path) {
    RawPng raw = read_raw(path);
    ImageCrop img(raw.height, raw.width, raw.channels);
    for (size_t i = 0; i < raw.pixels.size(); ++i)
        img.data[i] = float(raw.pixels[i]) / 255.0f;
    return img;
}

void write_png(const std::string& path, const ImageCrop& img) {
    if (img.height <= 0 || img.width <= 0) throw std::invalid_argument("write_png: empty image");
    std::vector<uint8_t> pixels(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) {
        float v = std::clamp(img.data[i], 0.0f, 1.0f);
        pixels[i] = uint8_t(std::lround(v * 255.0f));
    }
    write_raw(path, img.height, img.width, img.channels, pixels);
}

BinaryMask read_mask_png(const std::string& path) {
    RawPng raw = read_raw(path);
    BinaryMask mask(raw.height, raw.width);
    const int ch = raw.channels;
    for (int i = 0; i < raw.height * raw.width; ++i)
        mask.bits[i] = raw.pixels[size_t(i) * ch] >= 128 ? 1 : 0;
    return mask;
}

void write_mask_png(const std::string& path, const BinaryMask& mask) {
    std::vector<uint8_t> pixels(mask.bits.size());
    for (size_t i = 0; i < mask.bits.size(); ++i) pixels[i] = mask.bits[i] ? 255 : 0;
    write_raw(path, mask.height, mask.width, 1, pixels);
}

}  // namespace smorph
