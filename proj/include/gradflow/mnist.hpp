#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gradflow/objectives.hpp"

namespace gradflow {

/// Malformed IDX payload; the message carries the offending byte offset.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Missing or unreadable data files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Grayscale images (pixels in [0,1]) with integer labels, same length.
struct ImageSet {
  std::vector<Eigen::MatrixXd> images;
  std::vector<int> labels;

  std::size_t count() const { return images.size(); }
};

/// Per-image average intensity (a1, in [0,1]) and average symmetry
/// (a2, in [-1,0]) plus the task targets.
struct FeatureTable {
  Eigen::VectorXd a1;
  Eigen::VectorXd a2;
  Eigen::VectorXd targets;
};

/// IDX image container: big-endian magic 0x00000803, then count/rows/cols
/// as big-endian 32-bit sizes, then unsigned-byte pixels in row-major
/// order, scaled here to [0,1].
std::vector<Eigen::MatrixXd> parse_idx_images(const std::vector<std::uint8_t>& bytes);

/// IDX label container, magic 0x00000801.
std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes);

/// Serializers for fixtures and round-trip checks; pixels are quantized
/// back to bytes with rounding.
std::vector<std::uint8_t> write_idx_images(const std::vector<Eigen::MatrixXd>& images);
std::vector<std::uint8_t> write_idx_labels(const std::vector<int>& labels);

/// Reads a file, transparently gunzipping payloads that carry the gzip
/// magic, and parses it as IDX.
ImageSet load_image_set(const std::string& images_path, const std::string& labels_path);

/// Locates the standard training-set file names (optionally .gz) under a
/// directory; throws DataError listing the expected paths when absent.
ImageSet load_mnist_training(const std::string& dir);

enum class RelabelScheme {
  binary,      // first kept digit -> 0, second -> 1
  signed_pm1,  // first kept digit -> -1, second -> +1
};

/// Keeps instances labeled with either digit, in file order, truncated at
/// `limit`, and relabels them per the scheme. Fewer matches than the limit
/// is not an error; the caller can inspect count().
ImageSet filter_digits(const ImageSet& set, std::pair<int, int> keep, std::size_t limit,
                       RelabelScheme scheme = RelabelScheme::binary);

/// Mean over all 784 pixels of a 28x28 image.
double intensity(const Eigen::MatrixXd& image);

/// Negated mean absolute difference between the image and its horizontal
/// mirror; 0 for mirror-symmetric images, -1 at the opposite extreme.
double symmetry(const Eigen::MatrixXd& image);

/// Computes (a1, a2) for every image and carries the labels through as
/// targets.
FeatureTable feature_table(const ImageSet& set);

/// Quadratic feature transform [a1, a2, a1^2, a1*a2, a2^2], each column
/// standardized (population standard deviation), then an all-ones column:
/// an n x 6 design matrix. A zero-variance column is a degenerate input
/// and raises an error naming the column.
Dataset feature_matrix(const FeatureTable& table);

}  // namespace gradflow
