#include "token_painter/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "token_painter/errors.hpp"

namespace tp::io {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

// Netpbm header: magic, width, height, maxval, with '#' comments.
struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(const std::string& bytes, const fs::path& path) {
  PnmHeader h;
  std::size_t pos = 0;
  const auto next_token = [&]() -> std::string {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw FormatError(path.string() + ": truncated header");
    return bytes.substr(start, pos - start);
  };
  const auto next_int = [&]() {
    const std::string t = next_token();
    try {
      return std::stoi(t);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": bad header field '" + t + "'");
    }
  };
  h.magic = next_token();
  h.width = next_int();
  h.height = next_int();
  h.maxval = next_int();
  if (pos >= bytes.size()) throw FormatError(path.string() + ": missing pixel data");
  h.data_offset = pos + 1;  // exactly one whitespace byte follows maxval
  if (h.width <= 0 || h.height <= 0) throw FormatError(path.string() + ": bad dimensions");
  return h;
}

}  // namespace

Image read_image(const fs::path& path) {
  const std::string bytes = slurp(path);
  const auto h = parse_pnm_header(bytes, path);
  int channels = 0;
  if (h.magic == "P6") {
    channels = 3;
  } else if (h.magic == "P5") {
    channels = 1;
  } else {
    throw FormatError(path.string() + ": expected binary PPM (P6) or PGM (P5)");
  }
  if (h.maxval <= 0 || h.maxval > 255) throw FormatError(path.string() + ": maxval must be 1..255");
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height * channels;
  if (bytes.size() < h.data_offset + n) throw FormatError(path.string() + ": truncated pixel data");
  Image img(h.width, h.height, channels);
  for (std::size_t i = 0; i < n; ++i) {
    img.values[i] = static_cast<unsigned char>(bytes[h.data_offset + i]) / static_cast<double>(h.maxval);
  }
  return img;
}

void write_image(const fs::path& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3) throw FormatError("write_image: 1 or 3 channels only");
  auto out = open_out(path);
  out << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
  std::string data(img.values.size(), '\0');
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    const double v = std::clamp(img.values[i], 0.0, 1.0);
    data[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

PixelMask read_mask(const fs::path& path) {
  const std::string bytes = slurp(path);
  if (bytes.size() >= 2 && bytes[0] == 'P') {
    const auto h = parse_pnm_header(bytes, path);
    if (h.magic != "P5") throw FormatError(path.string() + ": mask must be a binary PGM (P5)");
    if (h.maxval != 255) throw FormatError(path.string() + ": mask PGM must use maxval 255");
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
    if (bytes.size() < h.data_offset + n) throw FormatError(path.string() + ": truncated mask");
    PixelMask m(h.height, h.width);
    for (std::size_t i = 0; i < n; ++i) {
      m.bits[i] = static_cast<unsigned char>(bytes[h.data_offset + i]) >= 128 ? 1 : 0;
    }
    return m;
  }

  // CSV grid of 0/1.
  std::vector<std::vector<std::uint8_t>> rows;
  std::istringstream lines(bytes);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::uint8_t> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      const std::string v = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      if (v == "0") {
        row.push_back(0);
      } else if (v == "1") {
        row.push_back(1);
      } else {
        throw FormatError(path.string() + ": mask CSV cells must be 0 or 1, got '" + v + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(path.string() + ": ragged mask CSV");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(path.string() + ": empty mask");
  PixelMask m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) m.set(r, c, rows[r][c] != 0);
  return m;
}

void write_mask_pgm(const fs::path& path, const PixelMask& mask) {
  auto out = open_out(path);
  out << "P5\n" << mask.cols << ' ' << mask.rows << "\n255\n";
  std::string data(mask.bits.size(), '\0');
  for (std::size_t i = 0; i < mask.bits.size(); ++i) data[i] = mask.bits[i] ? static_cast<char>(255) : 0;
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

void write_heatmap(const fs::path& path, int rows, int cols, std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(rows) * cols) throw DimensionError("heatmap: size");
  auto out = open_out(path);
  out << "P5\n" << cols << ' ' << rows << "\n65535\n";
  std::string data(values.size() * 2, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto v = static_cast<std::uint16_t>(std::lround(std::clamp(values[i], 0.0, 1.0) * 65535.0));
    data[2 * i] = static_cast<char>(v >> 8);  // PGM samples are big-endian
    data[2 * i + 1] = static_cast<char>(v & 0xff);
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

void write_grid_csv(const fs::path& path, int rows, int cols, std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(rows) * cols) throw DimensionError("grid csv: size");
  std::ostringstream ss;
  ss.precision(17);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c) ss << ',';
      ss << values[static_cast<std::size_t>(r) * cols + c];
    }
    ss << '\n';
  }
  write_text(path, ss.str());
}

void write_tensor(const fs::path& path, const Tensor& t) {
  std::size_t count = 1;
  for (const auto d : t.shape) count *= d;
  if (count != t.values.size()) throw DimensionError("write_tensor: shape does not match values");

  nlohmann::ordered_json desc;
  desc["shape"] = t.shape;
  desc["dtype"] = t.dtype == DType::f32le ? "f32le" : "f64le";
  desc["order"] = "row-major";
  write_text(fs::path(path.string() + ".json"), desc.dump(2) + "\n");

  const std::size_t width = t.dtype == DType::f32le ? 4 : 8;
  std::string data(count * width, '\0');
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    if (t.dtype == DType::f32le) {
      bits = std::bit_cast<std::uint32_t>(static_cast<float>(t.values[i]));
    } else {
      bits = std::bit_cast<std::uint64_t>(t.values[i]);
    }
    for (std::size_t b = 0; b < width; ++b) data[i * width + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  auto out = open_out(path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

Tensor read_tensor(const fs::path& path) {
  nlohmann::json desc;
  try {
    desc = nlohmann::json::parse(slurp(fs::path(path.string() + ".json")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ".json: " + e.what());
  }
  Tensor t;
  try {
    t.shape = desc.at("shape").get<std::vector<std::size_t>>();
    const auto dtype = desc.at("dtype").get<std::string>();
    if (dtype == "f32le") {
      t.dtype = DType::f32le;
    } else if (dtype == "f64le") {
      t.dtype = DType::f64le;
    } else {
      throw FormatError(path.string() + ": unsupported dtype '" + dtype + "'");
    }
    if (desc.contains("order") && desc.at("order").get<std::string>() != "row-major") {
      throw FormatError(path.string() + ": only row-major order is supported");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ".json: " + e.what());
  }
  std::size_t count = 1;
  for (const auto d : t.shape) count *= d;
  const std::size_t width = t.dtype == DType::f32le ? 4 : 8;
  const std::string data = slurp(path);
  if (data.size() != count * width) {
    throw FormatError(path.string() + ": payload is " + std::to_string(data.size()) +
                      " bytes, descriptor implies " + std::to_string(count * width));
  }
  t.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < width; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[i * width + b])) << (8 * b);
    }
    t.values[i] = t.dtype == DType::f32le
                      ? static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(bits)))
                      : std::bit_cast<double>(bits);
  }
  return t;
}

Tensor to_tensor(const TokenGrid& grid) {
  return {{static_cast<std::size_t>(grid.rows), static_cast<std::size_t>(grid.cols),
           static_cast<std::size_t>(grid.dim)},
          DType::f64le,
          grid.values};
}

Tensor to_tensor(const Matrix& m) {
  return {{m.rows(), m.cols()}, DType::f64le, {m.data().begin(), m.data().end()}};
}

Matrix to_matrix(const Tensor& t) {
  if (t.shape.size() != 2) throw FormatError("expected a 2-D tensor");
  Matrix m(t.shape[0], t.shape[1]);
  std::ranges::copy(t.values, m.data().begin());
  return m;
}

std::string read_text(const fs::path& path) { return slurp(path); }

void write_text(const fs::path& path, std::string_view text) {
  auto out = open_out(path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace tp::io
