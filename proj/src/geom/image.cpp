#include "hoir/geom/image.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace hoir::geom {

static_assert(std::endian::native == std::endian::little, "PFM writer assumes little-endian host");

size_t Mask::count() const {
  size_t n = 0;
  for (uint8_t v : data) n += v != 0;
  return n;
}

Mask mask_subtract(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height) throw IoError("mask_subtract: size mismatch");
  Mask out(a.width, a.height);
  for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = (a.data[i] && !b.data[i]) ? 255 : 0;
  return out;
}

void write_pfm(const std::string& path, const Image& img) {
  if (img.width <= 0 || img.height <= 0 || img.channels <= 0)
    throw IoError("write_pfm: empty image: " + path);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_pfm: cannot open " + path);
  const int stacked_h = img.channels * img.height;
  f << "Pf\n" << img.width << " " << stacked_h << "\n-1.0\n";
  // Stacked row index br = c*height + y; PFM rows go bottom-up.
  for (int br = stacked_h - 1; br >= 0; --br) {
    const int c = br / img.height;
    const int y = br % img.height;
    f.write(reinterpret_cast<const char*>(&img.data[c * img.plane() + static_cast<size_t>(y) * img.width]),
            static_cast<std::streamsize>(img.width) * sizeof(float));
  }
  if (!f) throw IoError("write_pfm: write failed: " + path);
}

Image read_pfm(const std::string& path, int channels) {
  if (channels <= 0) throw IoError("read_pfm: channels must be positive");
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_pfm: cannot open " + path);
  std::string magic;
  int w = 0, stacked_h = 0;
  double scale = 0.0;
  f >> magic >> w >> stacked_h >> scale;
  if (magic != "Pf") throw IoError("read_pfm: expected grayscale Pf: " + path);
  if (w <= 0 || stacked_h <= 0) throw IoError("read_pfm: bad dimensions: " + path);
  if (scale >= 0.0) throw IoError("read_pfm: big-endian PFM unsupported: " + path);
  if (stacked_h % channels != 0)
    throw IoError("read_pfm: stacked height not divisible by channel count: " + path);
  f.get();  // single whitespace byte after the header

  const int h = stacked_h / channels;
  Image img(w, h, channels);
  for (int br = stacked_h - 1; br >= 0; --br) {
    const int c = br / h;
    const int y = br % h;
    f.read(reinterpret_cast<char*>(&img.data[c * img.plane() + static_cast<size_t>(y) * w]),
           static_cast<std::streamsize>(w) * sizeof(float));
  }
  if (!f) throw IoError("read_pfm: truncated file: " + path);
  return img;
}

namespace {

// --- minimal PNG (gray8) ---

void put_u32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(static_cast<uint8_t>(x >> 24));
  v.push_back(static_cast<uint8_t>(x >> 16));
  v.push_back(static_cast<uint8_t>(x >> 8));
  v.push_back(static_cast<uint8_t>(x));
}

uint32_t get_u32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void append_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& body) {
  put_u32(out, static_cast<uint32_t>(body.size()));
  const size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), body.begin(), body.end());
  const uint32_t crc = static_cast<uint32_t>(
      crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
  put_u32(out, crc);
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

void write_png_gray(const std::string& path, const Mask& mask) {
  if (mask.width <= 0 || mask.height <= 0) throw IoError("write_png_gray: empty mask: " + path);
  const int w = mask.width, h = mask.height;

  // Filter byte 0 per scanline.
  std::vector<uint8_t> raw(static_cast<size_t>(h) * (w + 1));
  for (int y = 0; y < h; ++y) {
    raw[static_cast<size_t>(y) * (w + 1)] = 0;
    std::memcpy(&raw[static_cast<size_t>(y) * (w + 1) + 1], &mask.data[static_cast<size_t>(y) * w],
                w);
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw IoError("write_png_gray: deflate failed: " + path);
  comp.resize(comp_len);

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<uint8_t> ihdr;
  put_u32(ihdr, static_cast<uint32_t>(w));
  put_u32(ihdr, static_cast<uint32_t>(h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // color type: grayscale
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", comp);
  append_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_png_gray: cannot open " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write_png_gray: write failed: " + path);
}

Mask read_png_gray(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_png_gray: cannot open " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (buf.size() < 8 || std::memcmp(buf.data(), sig, 8) != 0)
    throw IoError("read_png_gray: not a PNG: " + path);

  int w = 0, h = 0;
  std::vector<uint8_t> idat;
  bool saw_ihdr = false;
  size_t pos = 8;
  while (pos + 8 <= buf.size()) {
    const uint32_t len = get_u32(&buf[pos]);
    if (pos + 12 + len > buf.size()) throw IoError("read_png_gray: truncated chunk: " + path);
    const char* type = reinterpret_cast<const char*>(&buf[pos + 4]);
    const uint8_t* body = &buf[pos + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw IoError("read_png_gray: bad IHDR: " + path);
      w = static_cast<int>(get_u32(body));
      h = static_cast<int>(get_u32(body + 4));
      const int bit_depth = body[8], color = body[9], interlace = body[12];
      if (bit_depth != 8 || color != 0)
        throw IoError("read_png_gray: only 8-bit grayscale supported: " + path);
      if (interlace != 0) throw IoError("read_png_gray: interlaced PNG unsupported: " + path);
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), body, body + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || w <= 0 || h <= 0) throw IoError("read_png_gray: missing IHDR: " + path);

  std::vector<uint8_t> raw(static_cast<size_t>(h) * (w + 1));
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size())
    throw IoError("read_png_gray: inflate failed: " + path);

  Mask mask(w, h);
  std::vector<uint8_t> prev(w, 0);
  for (int y = 0; y < h; ++y) {
    const uint8_t filter = raw[static_cast<size_t>(y) * (w + 1)];
    const uint8_t* line = &raw[static_cast<size_t>(y) * (w + 1) + 1];
    uint8_t* out = &mask.data[static_cast<size_t>(y) * w];
    for (int x = 0; x < w; ++x) {
      const int a = x > 0 ? out[x - 1] : 0;
      const int b = prev[x];
      const int c = x > 0 ? prev[x - 1] : 0;
      int v = line[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw IoError("read_png_gray: unknown filter: " + path);
      }
      out[x] = static_cast<uint8_t>(v & 0xff);
    }
    std::memcpy(prev.data(), out, w);
  }
  return mask;
}

}  // namespace hoir::geom
