#include "hazefuse/image.hpp"

#include <cmath>
#include <fstream>

#include "hazefuse/error.hpp"

namespace hazefuse {

std::size_t SkyMask::count() const {
  std::size_t n = 0;
  for (std::uint8_t f : flags) n += f != 0;
  return n;
}

double SkyMask::fraction() const {
  if (flags.empty()) return 0.0;
  return static_cast<double>(count()) / static_cast<double>(flags.size());
}

GrayImage to_gray(const RasterImage& img) {
  GrayImage gray;
  gray.width = img.width;
  gray.height = img.height;
  gray.values.resize(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < gray.values.size(); ++i) {
    const std::uint8_t* p = img.pixels.data() + 3 * i;
    const double luma = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    gray.values[i] = static_cast<std::uint8_t>(std::floor(luma + 0.5));
  }
  return gray;
}

namespace {

// One whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      while (in.get(c) && c != '\n') {
      }
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(c);
  }
  return token;
}

}  // namespace

RasterImage load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  if (next_token(in) != "P6") {
    raise(ErrorCode::MalformedRecord, "'" + path.string() + "' is not a binary PPM (P6)");
  }
  RasterImage img;
  int maxval = 0;
  try {
    img.width = std::stoi(next_token(in));
    img.height = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    raise(ErrorCode::MalformedRecord, "bad PPM header in '" + path.string() + "'");
  }
  if (img.width < 1 || img.height < 1 || maxval != 255) {
    raise(ErrorCode::MalformedRecord, "unsupported PPM geometry/maxval in '" + path.string() + "'");
  }
  img.pixels.resize(static_cast<std::size_t>(3) * img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    raise(ErrorCode::MalformedRecord, "truncated pixel data in '" + path.string() + "'");
  }
  return img;
}

void save_ppm(const RasterImage& img, const std::filesystem::path& path) {
  if (!img.valid()) raise(ErrorCode::DomainError, "invalid image");
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) raise(ErrorCode::IoFailure, "write failed on '" + path.string() + "'");
}

void save_pbm(const SkyMask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out << "P4\n" << mask.width << ' ' << mask.height << '\n';
  const int row_bytes = (mask.width + 7) / 8;
  std::vector<std::uint8_t> row(row_bytes);
  for (int y = 0; y < mask.height; ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (int x = 0; x < mask.width; ++x) {
      if (mask.get(x, y)) row[x / 8] |= static_cast<std::uint8_t>(0x80 >> (x % 8));
    }
    out.write(reinterpret_cast<const char*>(row.data()), row_bytes);
  }
  if (!out) raise(ErrorCode::IoFailure, "write failed on '" + path.string() + "'");
}

}  // namespace hazefuse
