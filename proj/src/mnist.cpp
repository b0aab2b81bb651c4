#include "gradflow/mnist.hpp"

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace gradflow {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_u32_be(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                          const char* what) {
  if (offset + 4 > bytes.size()) {
    throw ParseError(std::string("IDX parse: truncated while reading ") + what +
                     " at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void append_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void check_magic(std::uint32_t got, std::uint32_t expected) {
  if (got != expected) {
    char buf[96];
    std::snprintf(buf, sizeof(buf),
                  "IDX parse: magic 0x%08x at byte offset 0, expected 0x%08x", got, expected);
    throw ParseError(buf);
  }
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open '" + path + "'");
  }
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

bool looks_gzipped(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& bytes) {
  z_stream zs{};
  // 15 + 32: accept both zlib and gzip framing
  if (inflateInit2(&zs, 15 + 32) != Z_OK) {
    throw DataError("zlib: inflateInit2 failed");
  }
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> chunk;
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  int rc = Z_OK;
  do {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw DataError("zlib: corrupt gzip stream (code " + std::to_string(rc) + ")");
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
  } while (rc != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

}  // namespace

std::vector<Eigen::MatrixXd> parse_idx_images(const std::vector<std::uint8_t>& bytes) {
  check_magic(read_u32_be(bytes, 0, "magic"), kImageMagic);
  const std::uint32_t count = read_u32_be(bytes, 4, "image count");
  const std::uint32_t rows = read_u32_be(bytes, 8, "row count");
  const std::uint32_t cols = read_u32_be(bytes, 12, "column count");
  const std::size_t expected = 16 + std::size_t(count) * rows * cols;
  if (bytes.size() < expected) {
    throw ParseError("IDX parse: payload holds " + std::to_string(bytes.size() - 16) +
                     " pixel bytes but the header promises " +
                     std::to_string(std::size_t(count) * rows * cols) +
                     " (truncation at byte offset " + std::to_string(bytes.size()) + ")");
  }

  std::vector<Eigen::MatrixXd> images;
  images.reserve(count);
  std::size_t offset = 16;
  for (std::uint32_t i = 0; i < count; ++i) {
    Eigen::MatrixXd img(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        img(r, c) = bytes[offset++] / 255.0;
      }
    }
    images.push_back(std::move(img));
  }
  return images;
}

std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
  check_magic(read_u32_be(bytes, 0, "magic"), kLabelMagic);
  const std::uint32_t count = read_u32_be(bytes, 4, "label count");
  if (bytes.size() < 8 + count) {
    throw ParseError("IDX parse: payload holds " + std::to_string(bytes.size() - 8) +
                     " labels but the header promises " + std::to_string(count) +
                     " (truncation at byte offset " + std::to_string(bytes.size()) + ")");
  }
  std::vector<int> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    labels[i] = bytes[8 + i];
  }
  return labels;
}

std::vector<std::uint8_t> write_idx_images(const std::vector<Eigen::MatrixXd>& images) {
  const std::uint32_t rows = images.empty() ? 0 : static_cast<std::uint32_t>(images[0].rows());
  const std::uint32_t cols = images.empty() ? 0 : static_cast<std::uint32_t>(images[0].cols());
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.size() * rows * cols);
  append_u32_be(out, kImageMagic);
  append_u32_be(out, static_cast<std::uint32_t>(images.size()));
  append_u32_be(out, rows);
  append_u32_be(out, cols);
  for (const auto& img : images) {
    if (img.rows() != rows || img.cols() != cols) {
      throw std::invalid_argument("write_idx_images: images must share one shape");
    }
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        out.push_back(static_cast<std::uint8_t>(std::lround(img(r, c) * 255.0)));
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> write_idx_labels(const std::vector<int>& labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  append_u32_be(out, kLabelMagic);
  append_u32_be(out, static_cast<std::uint32_t>(labels.size()));
  for (int label : labels) {
    out.push_back(static_cast<std::uint8_t>(label));
  }
  return out;
}

ImageSet load_image_set(const std::string& images_path, const std::string& labels_path) {
  auto load = [](const std::string& path) {
    std::vector<std::uint8_t> bytes = read_file(path);
    return looks_gzipped(bytes) ? gunzip(bytes) : bytes;
  };
  ImageSet set;
  set.images = parse_idx_images(load(images_path));
  set.labels = parse_idx_labels(load(labels_path));
  if (set.images.size() != set.labels.size()) {
    throw ParseError("IDX parse: " + std::to_string(set.images.size()) + " images vs " +
                     std::to_string(set.labels.size()) + " labels");
  }
  return set;
}

ImageSet load_mnist_training(const std::string& dir) {
  namespace fs = std::filesystem;
  auto find = [&](std::initializer_list<const char*> names) -> std::string {
    for (const char* name : names) {
      for (const char* suffix : {"", ".gz"}) {
        const fs::path candidate = fs::path(dir) / (std::string(name) + suffix);
        if (fs::exists(candidate)) return candidate.string();
      }
    }
    return {};
  };
  const std::string images = find({"train-images-idx3-ubyte", "train-images.idx3-ubyte"});
  const std::string labels = find({"train-labels-idx1-ubyte", "train-labels.idx1-ubyte"});
  if (images.empty() || labels.empty()) {
    throw DataError("MNIST training files not found under '" + dir +
                    "'; expected train-images-idx3-ubyte and train-labels-idx1-ubyte "
                    "(optionally .gz)");
  }
  return load_image_set(images, labels);
}

ImageSet filter_digits(const ImageSet& set, std::pair<int, int> keep, std::size_t limit,
                       RelabelScheme scheme) {
  if (keep.first == keep.second) {
    throw std::invalid_argument("filter_digits: the two kept digits must differ");
  }
  if (set.images.size() != set.labels.size()) {
    throw std::invalid_argument("filter_digits: images/labels length mismatch");
  }
  const int lo = scheme == RelabelScheme::binary ? 0 : -1;
  const int hi = 1;
  ImageSet out;
  for (std::size_t i = 0; i < set.labels.size() && out.count() < limit; ++i) {
    if (set.labels[i] == keep.first) {
      out.images.push_back(set.images[i]);
      out.labels.push_back(lo);
    } else if (set.labels[i] == keep.second) {
      out.images.push_back(set.images[i]);
      out.labels.push_back(hi);
    }
  }
  return out;
}

namespace {

void check_shape(const Eigen::MatrixXd& image) {
  if (image.rows() != 28 || image.cols() != 28) {
    throw std::invalid_argument("expected a 28x28 image, got " + std::to_string(image.rows()) +
                                "x" + std::to_string(image.cols()));
  }
}

}  // namespace

double intensity(const Eigen::MatrixXd& image) {
  check_shape(image);
  return image.mean();
}

double symmetry(const Eigen::MatrixXd& image) {
  check_shape(image);
  return -(image - image.rowwise().reverse()).cwiseAbs().mean();
}

FeatureTable feature_table(const ImageSet& set) {
  const Eigen::Index n = static_cast<Eigen::Index>(set.count());
  FeatureTable table;
  table.a1.resize(n);
  table.a2.resize(n);
  table.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    table.a1[i] = intensity(set.images[i]);
    table.a2[i] = symmetry(set.images[i]);
    table.targets[i] = set.labels[i];
  }
  return table;
}

Dataset feature_matrix(const FeatureTable& table) {
  const Eigen::Index n = table.a1.size();
  if (n < 2) {
    throw std::invalid_argument("feature_matrix: need at least two rows to standardize");
  }
  if (table.a2.size() != n || table.targets.size() != n) {
    throw std::invalid_argument("feature_matrix: column lengths differ");
  }

  Eigen::MatrixXd raw(n, 5);
  raw.col(0) = table.a1;
  raw.col(1) = table.a2;
  raw.col(2) = table.a1.array().square();
  raw.col(3) = table.a1.array() * table.a2.array();
  raw.col(4) = table.a2.array().square();
  static const char* kColumnNames[5] = {"a1", "a2", "a1^2", "a1*a2", "a2^2"};

  Dataset data;
  data.design.resize(n, 6);
  for (int c = 0; c < 5; ++c) {
    const double mean = raw.col(c).mean();
    const double sd = std::sqrt((raw.col(c).array() - mean).square().mean());
    if (!(sd > 0.0)) {
      throw std::invalid_argument(std::string("feature_matrix: column ") + kColumnNames[c] +
                                  " has zero variance");
    }
    data.design.col(c) = (raw.col(c).array() - mean) / sd;
  }
  data.design.col(5).setOnes();
  data.targets = table.targets;
  return data;
}

}  // namespace gradflow
