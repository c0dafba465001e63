#include "dtstyle/imageio.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <png.h>

namespace dtstyle {

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw ImageError(ImageError::Kind::unreadable, "cannot read image file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError(ImageError::Kind::unreadable, "cannot open image file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool has_png_signature(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  return bytes.size() >= 8 && std::equal(std::begin(kSig), std::end(kSig), bytes.begin());
}

bool has_jpeg_signature(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

std::uint8_t over_white(std::uint8_t c, std::uint8_t a) {
  return static_cast<std::uint8_t>((unsigned{c} * a + 255u * (255u - a) + 127u) / 255u);
}

Image decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    std::string msg = png.message;
    png_image_free(&png);
    throw ImageError(ImageError::Kind::corrupt, "corrupt PNG " + name + ": " + msg);
  }
  png.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, rgba.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw ImageError(ImageError::Kind::corrupt, "corrupt PNG " + name + ": " + msg);
  }
  const std::size_t width = png.width;
  const std::size_t height = png.height;
  std::vector<std::uint8_t> rgb(width * height * 3);
  for (std::size_t i = 0; i < width * height; ++i) {
    const std::uint8_t a = rgba[i * 4 + 3];
    for (std::size_t c = 0; c < 3; ++c) rgb[i * 3 + c] = over_white(rgba[i * 4 + c], a);
  }
  return Image(width, height, std::move(rgb));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silence(j_common_ptr) {}

// Returns an empty string on success, otherwise the decoder's message. Kept
// free of objects with non-trivial destructors between setjmp and longjmp.
std::string decode_jpeg_raw(const std::vector<std::uint8_t>& bytes, std::size_t& width, std::size_t& height,
                            std::vector<std::uint8_t>& rgb, bool& unsupported) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.output_message = jpeg_silence;
  err.message[0] = '\0';
  unsupported = false;

  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return err.message[0] != '\0' ? err.message : "decode failure";
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.jpeg_color_space != JCS_GRAYSCALE && cinfo.jpeg_color_space != JCS_YCbCr &&
      cinfo.jpeg_color_space != JCS_RGB) {
    unsupported = true;
    jpeg_destroy_decompress(&cinfo);
    return "unsupported JPEG color space";
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = cinfo.output_width;
  height = cinfo.output_height;
  rgb.resize(width * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return {};
}

Image decode_jpeg(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;
  bool unsupported = false;
  const std::string msg = decode_jpeg_raw(bytes, width, height, rgb, unsupported);
  if (!msg.empty()) {
    throw ImageError(unsupported ? ImageError::Kind::unsupported_format : ImageError::Kind::corrupt,
                     "cannot decode JPEG " + name + ": " + msg);
  }
  return Image(width, height, std::move(rgb));
}

std::uint8_t round_clamp_u8(double v) {
  // std::round is half-away-from-zero.
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

// Tensor channel k holds RGB component source_channel(k).
std::size_t source_channel(std::size_t k, ChannelOrder order) { return order == ChannelOrder::rgb ? k : 2 - k; }

}  // namespace

Image::Image(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width_ == 0 || height_ == 0) throw std::invalid_argument("Image: zero dimension");
  if (pixels_.size() != width_ * height_ * 3) throw std::invalid_argument("Image: pixel buffer length mismatch");
}

Image::Image(std::size_t width, std::size_t height, std::array<std::uint8_t, 3> fill)
    : width_(width), height_(height) {
  if (width_ == 0 || height_ == 0) throw std::invalid_argument("Image: zero dimension");
  pixels_.resize(width_ * height_ * 3);
  for (std::size_t i = 0; i < width_ * height_; ++i) std::copy(fill.begin(), fill.end(), pixels_.begin() + i * 3);
}

void Preprocess::validate() const {
  for (double m : channel_mean) {
    if (!(m >= 0.0 && m <= 255.0)) throw std::invalid_argument("Preprocess: channel mean outside [0, 255]");
  }
}

Image load_image(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  if (has_png_signature(bytes)) return decode_png(bytes, path.string());
  if (has_jpeg_signature(bytes)) return decode_jpeg(bytes, path.string());
  throw ImageError(ImageError::Kind::unsupported_format, "not a PNG or JPEG file: " + path.string());
}

void save_png(const std::filesystem::path& path, const Image& img) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, img.pixels().data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw ImageError(ImageError::Kind::write_failed, "cannot write PNG " + path.string() + ": " + msg);
  }
}

Image resize_bilinear(const Image& img, std::size_t new_width, std::size_t new_height) {
  if (new_width == 0 || new_height == 0) throw std::invalid_argument("resize_bilinear: zero dimension");
  if (new_width == img.width() && new_height == img.height()) return img;

  const double sx = static_cast<double>(img.width()) / static_cast<double>(new_width);
  const double sy = static_cast<double>(img.height()) / static_cast<double>(new_height);
  const double max_x = static_cast<double>(img.width() - 1);
  const double max_y = static_cast<double>(img.height() - 1);

  std::vector<std::uint8_t> out(new_width * new_height * 3);
  for (std::size_t y = 0; y < new_height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < new_width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = (1.0 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c);
        const double bottom = (1.0 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c);
        out[(y * new_width + x) * 3 + c] = round_clamp_u8((1.0 - wy) * top + wy * bottom);
      }
    }
  }
  return Image(new_width, new_height, std::move(out));
}

Tensor3 to_tensor(const Image& img, const Preprocess& prep) {
  Tensor3 t(3, img.height(), img.width());
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t src = source_channel(k, prep.channel_order);
    for (std::size_t y = 0; y < img.height(); ++y) {
      for (std::size_t x = 0; x < img.width(); ++x) t(k, y, x) = img.at(x, y, src) - prep.channel_mean[k];
    }
  }
  return t;
}

Image from_tensor(const Tensor3& t, const Preprocess& prep) {
  if (t.channels() != 3) {
    throw std::invalid_argument("from_tensor: expected 3 channels, got " + std::to_string(t.channels()));
  }
  std::vector<std::uint8_t> px(t.width() * t.height() * 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t dst = source_channel(k, prep.channel_order);
    for (std::size_t y = 0; y < t.height(); ++y) {
      for (std::size_t x = 0; x < t.width(); ++x) {
        px[(y * t.width() + x) * 3 + dst] = round_clamp_u8(t(k, y, x) + prep.channel_mean[k]);
      }
    }
  }
  return Image(t.width(), t.height(), std::move(px));
}

}  // namespace dtstyle
