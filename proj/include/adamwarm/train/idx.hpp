#pragma once

// IDX containers (MNIST/EMNIST family): big-endian magic, dimensions, then
// raw unsigned bytes. gzip input is recognised by its 1F 8B prefix.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adamwarm::train {

class IdxParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class IdxIoError : public IdxParseError {
public:
    using IdxParseError::IdxParseError;
};
class IdxBadMagic : public IdxParseError {
public:
    using IdxParseError::IdxParseError;
};
class IdxTruncated : public IdxParseError {
public:
    using IdxParseError::IdxParseError;
};
class IdxCountMismatch : public IdxParseError {
public:
    using IdxParseError::IdxParseError;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxDataset {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels; ///< count * rows * cols, row-major per image
    std::vector<std::uint8_t> labels;
    std::size_t n_classes = 0;

    std::size_t input_dim() const noexcept { return rows * cols; }
    std::span<const std::uint8_t> image(std::size_t i) const {
        return {pixels.data() + i * input_dim(), input_dim()};
    }
};

/// File contents, inflated when gzip-compressed. Throws IdxIoError.
std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path);

/// Parses in-memory buffers. `images_name`/`labels_name` only label errors.
IdxDataset parse_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes,
                     const std::string& images_name = "<images>", const std::string& labels_name = "<labels>");

IdxDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Serialises a dataset back to IDX byte streams (uncompressed).
std::vector<std::uint8_t> encode_idx_images(const IdxDataset& data);
std::vector<std::uint8_t> encode_idx_labels(const IdxDataset& data);

/// gzip-compresses a buffer (used by fixtures and the data tools).
std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> raw);

} // namespace adamwarm::train
