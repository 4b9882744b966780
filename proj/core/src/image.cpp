#include "trires/image.hpp"

#include <fstream>
#include <string>

namespace trires {

namespace {

void skip_space_and_comments(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
      in.get();
    } else {
      return;
    }
  }
}

int read_header_int(std::istream& in, const std::filesystem::path& path) {
  skip_space_and_comments(in);
  int v = -1;
  if (!(in >> v) || v < 0) throw FormatError("malformed netpbm header in " + path.string());
  return v;
}

void write_netpbm(const std::filesystem::path& path, char kind, int w, int h,
                  const std::vector<std::uint8_t>& pixels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << 'P' << kind << '\n' << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::uint8_t> read_payload(const std::filesystem::path& path, const NetpbmHeader& header,
                                       std::size_t bytes) {
  std::ifstream in(path, std::ios::binary);
  in.seekg(header.data_offset);
  std::vector<std::uint8_t> pixels(bytes);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw FormatError("truncated pixel data in " + path.string());
  }
  return pixels;
}

}  // namespace

NetpbmHeader read_netpbm_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  char p = 0, kind = 0;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '5' && kind != '6')) {
    throw FormatError(path.string() + " is not a binary P5/P6 netpbm file");
  }
  NetpbmHeader h;
  h.kind = kind;
  h.width = read_header_int(in, path);
  h.height = read_header_int(in, path);
  const int maxval = read_header_int(in, path);
  if (maxval != 255) throw FormatError(path.string() + ": only maxval 255 is supported");
  in.get();  // single whitespace before the raster
  h.data_offset = in.tellg();
  return h;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  write_netpbm(path, '6', image.width, image.height, image.pixels);
}

RgbImage read_ppm(const std::filesystem::path& path) {
  const auto header = read_netpbm_header(path);
  if (header.kind != '6') throw FormatError(path.string() + " is not a P6 image");
  RgbImage img;
  img.width = header.width;
  img.height = header.height;
  img.pixels = read_payload(path, header, static_cast<std::size_t>(header.width) * header.height * 3);
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  write_netpbm(path, '5', image.width, image.height, image.pixels);
}

GrayImage read_pgm(const std::filesystem::path& path) {
  const auto header = read_netpbm_header(path);
  if (header.kind != '5') throw FormatError(path.string() + " is not a P5 image");
  GrayImage img;
  img.width = header.width;
  img.height = header.height;
  img.pixels = read_payload(path, header, static_cast<std::size_t>(header.width) * header.height);
  return img;
}

RgbImage read_ppm_region(const std::filesystem::path& path, const NetpbmHeader& header, int x,
                         int y, int w, int h) {
  if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > header.width || y + h > header.height) {
    throw BoundsError("region outside image " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  RgbImage out(w, h);
  const std::size_t row_bytes = static_cast<std::size_t>(w) * 3;
  for (int r = 0; r < h; ++r) {
    const std::streamoff offset =
        header.data_offset + (static_cast<std::streamoff>(y + r) * header.width + x) * 3;
    in.seekg(offset);
    in.read(reinterpret_cast<char*>(out.pixels.data() + r * row_bytes),
            static_cast<std::streamsize>(row_bytes));
    if (static_cast<std::size_t>(in.gcount()) != row_bytes) {
      throw FormatError("truncated pixel data in " + path.string());
    }
  }
  return out;
}

RgbImage crop(const RgbImage& image, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > image.width || y + h > image.height) {
    throw BoundsError("crop outside image");
  }
  RgbImage out(w, h);
  for (int r = 0; r < h; ++r) {
    const auto* src = &image.pixels[(static_cast<std::size_t>(y + r) * image.width + x) * 3];
    std::copy(src, src + static_cast<std::size_t>(w) * 3, &out.pixels[static_cast<std::size_t>(r) * w * 3]);
  }
  return out;
}

RgbImage mean_pool_2x2(const RgbImage& image) {
  RgbImage out(image.width / 2, image.height / 2);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        auto px = [&](int xx, int yy) {
          return static_cast<int>(image.pixels[(static_cast<std::size_t>(yy) * image.width + xx) * 3 + c]);
        };
        const int s = px(2 * x, 2 * y) + px(2 * x + 1, 2 * y) + px(2 * x, 2 * y + 1) + px(2 * x + 1, 2 * y + 1);
        out.pixels[(static_cast<std::size_t>(y) * out.width + x) * 3 + c] = static_cast<std::uint8_t>((s + 2) / 4);
      }
    }
  }
  return out;
}

}  // namespace trires
