#include "dqrp/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace dqrp {

namespace {

int next_token(std::istream& is) {
  // Skips PGM whitespace and '#' comments, returns the next integer.
  while (true) {
    int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  int v;
  if (!(is >> v)) throw std::runtime_error("pgm: malformed header");
  return v;
}

}  // namespace

Image read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  char p, five;
  is.get(p);
  is.get(five);
  if (p != 'P' || five != '5')
    throw std::runtime_error(path + ": only binary PGM (P5) is supported");
  std::size_t w = next_token(is);
  std::size_t h = next_token(is);
  int maxval = next_token(is);
  is.get();  // single whitespace before the raster
  Image img;
  img.width = w;
  img.height = h;
  img.pixels.resize(w * h);
  if (maxval < 256) {
    std::vector<std::uint8_t> raw(w * h);
    is.read(reinterpret_cast<char*>(raw.data()), raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i];
  } else {
    std::vector<std::uint8_t> raw(2 * w * h);
    is.read(reinterpret_cast<char*>(raw.data()), raw.size());
    for (std::size_t i = 0; i < w * h; ++i)
      img.pixels[i] = 256.0 * raw[2 * i] + raw[2 * i + 1];
  }
  if (!is) throw std::runtime_error(path + ": truncated raster");
  return img;
}

void write_pgm(const std::string& path, const Image& img, int maxval) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";
  for (double v : img.pixels) {
    long q = std::lround(std::clamp(v, 0.0, static_cast<double>(maxval)));
    if (maxval < 256) {
      os.put(static_cast<char>(q));
    } else {
      os.put(static_cast<char>((q >> 8) & 0xff));
      os.put(static_cast<char>(q & 0xff));
    }
  }
}

std::vector<Image> read_raw_with_sidecar(const std::string& raw_path,
                                         const std::string& sidecar_path) {
  std::ifstream side(sidecar_path);
  if (!side) throw std::runtime_error("cannot read " + sidecar_path);
  nlohmann::json meta = nlohmann::json::parse(side);
  std::size_t w = meta.at("width").get<std::size_t>();
  std::size_t h = meta.at("height").get<std::size_t>();
  std::size_t bands = meta.at("bands").get<std::size_t>();

  std::ifstream raw(raw_path, std::ios::binary);
  if (!raw) throw std::runtime_error("cannot read " + raw_path);
  std::vector<Image> out(bands);
  std::vector<std::uint8_t> buf(2 * w * h);
  for (std::size_t b = 0; b < bands; ++b) {
    raw.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (!raw) throw std::runtime_error(raw_path + ": truncated");
    out[b].width = w;
    out[b].height = h;
    out[b].pixels.resize(w * h);
    for (std::size_t i = 0; i < w * h; ++i)
      out[b].pixels[i] = buf[2 * i] + 256.0 * buf[2 * i + 1];
  }
  return out;
}

}  // namespace dqrp
