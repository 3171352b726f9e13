#include "blurmeter/image_io.hpp"

#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "blurmeter/error.hpp"

namespace blurmeter {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return f;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// Splits interleaved samples into bands, dropping alpha when present.
MultiBandImage deinterleave(int width, int height, int channels, bool has_alpha,
                            double max_value, const std::vector<double>& interleaved) {
  MultiBandImage img;
  img.width = width;
  img.height = height;
  img.max_value = max_value;
  const int color = has_alpha ? channels - 1 : channels;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  img.bands.assign(color, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < color; ++c) img.bands[c][i] = interleaved[i * channels + c];
  return img;
}

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) {
  throw Error(ErrorKind::Io, std::string("png: ") + msg);
}
void png_warning_fn(png_structp, png_const_charp) {}

MultiBandImage read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) throw Error(ErrorKind::Io, "png: cannot allocate reader");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, f.get());
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const bool alpha = (png_get_color_type(png, info) & PNG_COLOR_MASK_ALPHA) != 0;
  const std::size_t rowbytes = png_get_rowbytes(png, info);

  std::vector<png_byte> buffer(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());

  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<double> samples(count);
  if (out_depth == 16) {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint16_t v;
      std::memcpy(&v, buffer.data() + 2 * i, 2);
      samples[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) samples[i] = buffer[i];
  }
  // Rows may carry padding only for sub-byte depths, which were expanded above.
  return deinterleave(width, height, channels, alpha, out_depth == 16 ? 65535.0 : 255.0,
                      samples);
}

MultiBandImage read_tiff(const std::filesystem::path& path) {
  TIFFSetWarningHandler(nullptr);
  TIFFSetErrorHandler(nullptr);
  std::unique_ptr<TIFF, decltype(&TIFFClose)> tif(TIFFOpen(path.c_str(), "r"), &TIFFClose);
  if (!tif) throw Error(ErrorKind::Io, "cannot open tiff " + path.string());
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t spp = 1;
  std::uint16_t bps = 8;
  std::uint16_t planar = PLANARCONFIG_CONTIG;
  std::uint16_t format = SAMPLEFORMAT_UINT;
  std::uint16_t extra = 0;
  std::uint16_t* extra_types = nullptr;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &width);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &height);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &format);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_EXTRASAMPLES, &extra, &extra_types);
  require(width > 0 && height > 0, "tiff has no pixels", ErrorKind::Io);
  require(planar == PLANARCONFIG_CONTIG, "planar tiff is not supported", ErrorKind::Io);
  const bool is_float = format == SAMPLEFORMAT_IEEEFP && bps == 32;
  require(is_float || (format == SAMPLEFORMAT_UINT && (bps == 8 || bps == 16)),
          "tiff must hold 8/16-bit unsigned or 32-bit float samples", ErrorKind::Io);

  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<double> samples(n * spp);
  std::vector<unsigned char> line(TIFFScanlineSize(tif.get()));
  for (std::uint32_t y = 0; y < height; ++y) {
    if (TIFFReadScanline(tif.get(), line.data(), y) < 0)
      throw Error(ErrorKind::Io, "tiff scanline read failed");
    for (std::size_t i = 0; i < static_cast<std::size_t>(width) * spp; ++i) {
      double v = 0.0;
      if (is_float) {
        float fv;
        std::memcpy(&fv, line.data() + 4 * i, 4);
        v = fv;
      } else if (bps == 16) {
        std::uint16_t sv;
        std::memcpy(&sv, line.data() + 2 * i, 2);
        v = sv;
      } else {
        v = line[i];
      }
      samples[y * static_cast<std::size_t>(width) * spp + i] = v;
    }
  }
  const double max_value = is_float ? 1.0 : (bps == 16 ? 65535.0 : 255.0);
  const bool alpha = extra > 0 && spp > 1;
  MultiBandImage img = deinterleave(static_cast<int>(width), static_cast<int>(height), spp,
                                    alpha, max_value, samples);
  // Extra samples beyond one alpha band are not colour either.
  if (extra > 1 && static_cast<int>(img.bands.size()) > spp - extra)
    img.bands.resize(std::max(1, spp - extra));
  return img;
}

// PGM tokens may be separated by whitespace and '#' comments.
std::string next_pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

MultiBandImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  const std::string magic = next_pgm_token(in);
  require(magic == "P2" || magic == "P5", "not a PGM file", ErrorKind::Io);
  int width = 0;
  int height = 0;
  int maxval = 0;
  try {
    width = std::stoi(next_pgm_token(in));
    height = std::stoi(next_pgm_token(in));
    maxval = std::stoi(next_pgm_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorKind::Io, "malformed PGM header");
  }
  require(width > 0 && height > 0 && maxval > 0 && maxval < 65536, "malformed PGM header",
          ErrorKind::Io);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<double> samples(n);
  if (magic == "P2") {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string tok = next_pgm_token(in);
      require(!tok.empty(), "truncated PGM data", ErrorKind::Io);
      samples[i] = std::stod(tok);
    }
  } else {
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(n * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(in.gcount() == static_cast<std::streamsize>(raw.size()), "truncated PGM data",
            ErrorKind::Io);
    for (std::size_t i = 0; i < n; ++i)
      samples[i] = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
  }
  return deinterleave(width, height, 1, false, maxval, samples);
}

std::vector<std::uint16_t> quantize(const Raster& image, int bit_depth) {
  require(bit_depth == 8 || bit_depth == 16, "bit depth must be 8 or 16");
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<std::uint16_t> out(image.size());
  auto d = image.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint16_t>(std::lround(std::clamp(d[i], 0.0, 1.0) * maxv));
  return out;
}

void write_tiff(const std::filesystem::path& path, int width, int height, int bit_depth,
                const std::vector<std::uint16_t>& samples) {
  std::unique_ptr<TIFF, decltype(&TIFFClose)> tif(TIFFOpen(path.c_str(), "w"), &TIFFClose);
  if (!tif) throw Error(ErrorKind::Io, "cannot write " + path.string());
  TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(width));
  TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(height));
  TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, 1);
  TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, bit_depth);
  TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
  TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, static_cast<std::uint32_t>(height));
  std::vector<unsigned char> line(static_cast<std::size_t>(width) * bit_depth / 8);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint16_t v = samples[y * static_cast<std::size_t>(width) + x];
      if (bit_depth == 16)
        std::memcpy(line.data() + 2 * x, &v, 2);
      else
        line[x] = static_cast<unsigned char>(v);
    }
    if (TIFFWriteScanline(tif.get(), line.data(), static_cast<std::uint32_t>(y)) < 0)
      throw Error(ErrorKind::Io, "tiff scanline write failed");
  }
}

void write_pgm(const std::filesystem::path& path, int width, int height, int bit_depth,
               const std::vector<std::uint16_t>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << '\n' << (bit_depth == 16 ? 65535 : 255) << '\n';
  for (std::uint16_t v : samples) {
    if (bit_depth == 16) out.put(static_cast<char>(v >> 8));
    out.put(static_cast<char>(v & 0xff));
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace

MultiBandImage read_image(const std::filesystem::path& path) {
  std::array<unsigned char, 8> sig{};
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    in.read(reinterpret_cast<char*>(sig.data()), sig.size());
    if (in.gcount() < 2) throw Error(ErrorKind::Io, "file too short: " + path.string());
  }
  if (png_sig_cmp(sig.data(), 0, sig.size()) == 0) return read_png(path);
  if ((sig[0] == 'I' && sig[1] == 'I') || (sig[0] == 'M' && sig[1] == 'M'))
    return read_tiff(path);
  if (sig[0] == 'P' && (sig[1] == '2' || sig[1] == '5')) return read_pgm(path);
  throw Error(ErrorKind::Io, "unrecognized image format: " + path.string());
}

Raster read_grayscale(const std::filesystem::path& path) {
  return to_grayscale(read_image(path));
}

void write_image(const std::filesystem::path& path, const Raster& image, int bit_depth) {
  require(!image.empty(), "cannot write an empty image");
  const auto samples = quantize(image, bit_depth);
  const std::string ext = lower_extension(path);
  if (ext == ".png")
    write_png_gray(path, image.width(), image.height(), bit_depth, samples);
  else if (ext == ".tif" || ext == ".tiff")
    write_tiff(path, image.width(), image.height(), bit_depth, samples);
  else if (ext == ".pgm")
    write_pgm(path, image.width(), image.height(), bit_depth, samples);
  else
    throw Error(ErrorKind::InvalidArgument, "unsupported output extension '" + ext + "'");
}

void write_png_gray(const std::filesystem::path& path, int width, int height, int bit_depth,
                    const std::vector<std::uint16_t>& samples) {
  require(bit_depth == 8 || bit_depth == 16, "bit depth must be 8 or 16");
  require(samples.size() == static_cast<std::size_t>(width) * height,
          "sample count must equal width*height");
  FilePtr f = open_file(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) throw Error(ErrorKind::Io, "png: cannot allocate writer");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int bytes = bit_depth / 8;
  std::vector<png_byte> row(static_cast<std::size_t>(width) * bytes);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint16_t v = samples[y * static_cast<std::size_t>(width) + x];
      if (bytes == 2) {
        row[2 * x] = static_cast<png_byte>(v >> 8);
        row[2 * x + 1] = static_cast<png_byte>(v & 0xff);
      } else {
        row[x] = static_cast<png_byte>(v);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

}  // namespace blurmeter
