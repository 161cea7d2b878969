#include "adamwarm/train/idx.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

namespace adamwarm::train {

namespace {

bool is_gzip(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B;
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> in, const std::string& name) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw IdxIoError(name + ": zlib initialisation failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    std::vector<std::uint8_t> out;
    std::uint8_t chunk[1 << 16];
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = chunk;
        zs.avail_out = sizeof chunk;
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw IdxTruncated(name + ": corrupt or truncated gzip stream at compressed offset " +
                               std::to_string(zs.total_in));
        }
        out.insert(out.end(), chunk, chunk + (sizeof chunk - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw IdxTruncated(name + ": gzip stream ends early after " + std::to_string(zs.total_in) + " bytes");
        }
    }
    inflateEnd(&zs);
    return out;
}

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t offset, const std::string& name) {
    if (offset + 4 > b.size()) {
        throw IdxTruncated(name + ": header truncated at offset " + std::to_string(offset));
    }
    return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
           (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t x) {
    out.push_back(static_cast<std::uint8_t>(x >> 24));
    out.push_back(static_cast<std::uint8_t>(x >> 16));
    out.push_back(static_cast<std::uint8_t>(x >> 8));
    out.push_back(static_cast<std::uint8_t>(x));
}

std::string hex32(std::uint32_t x) {
    std::ostringstream os;
    os << "0x" << std::hex;
    os.width(8);
    os.fill('0');
    os << x;
    return os.str();
}

} // namespace

std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IdxIoError(path.string() + ": cannot open file");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IdxIoError(path.string() + ": read error");
    if (is_gzip(bytes)) return gunzip(bytes, path.string());
    return bytes;
}

IdxDataset parse_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes,
                     const std::string& images_name, const std::string& labels_name) {
    const std::uint32_t img_magic = read_be32(image_bytes, 0, images_name);
    if (img_magic != kIdxImageMagic) {
        throw IdxBadMagic(images_name + ": expected image magic 0x00000803 at offset 0, found " + hex32(img_magic));
    }
    const std::uint32_t lbl_magic = read_be32(label_bytes, 0, labels_name);
    if (lbl_magic != kIdxLabelMagic) {
        throw IdxBadMagic(labels_name + ": expected label magic 0x00000801 at offset 0, found " + hex32(lbl_magic));
    }

    IdxDataset d;
    d.count = read_be32(image_bytes, 4, images_name);
    d.rows = read_be32(image_bytes, 8, images_name);
    d.cols = read_be32(image_bytes, 12, images_name);
    const std::size_t n_labels = read_be32(label_bytes, 4, labels_name);
    if (n_labels != d.count) {
        throw IdxCountMismatch(labels_name + ": " + std::to_string(n_labels) + " labels but " + images_name +
                               " holds " + std::to_string(d.count) + " images");
    }

    const auto needed = static_cast<unsigned __int128>(d.count) * d.rows * d.cols;
    if (needed > image_bytes.size() - 16) {
        throw IdxTruncated(images_name + ": payload truncated at offset " + std::to_string(image_bytes.size()) +
                           ", header declares " + std::to_string(d.count) + " images of " + std::to_string(d.rows) +
                           "x" + std::to_string(d.cols));
    }
    const std::size_t pixel_bytes = d.count * d.rows * d.cols;
    if (label_bytes.size() - 8 < n_labels) {
        throw IdxTruncated(labels_name + ": payload truncated at offset " + std::to_string(label_bytes.size()) +
                           ", expected " + std::to_string(8 + n_labels) + " bytes");
    }
    d.pixels.assign(image_bytes.begin() + 16, image_bytes.begin() + 16 + static_cast<std::ptrdiff_t>(pixel_bytes));
    d.labels.assign(label_bytes.begin() + 8, label_bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n_labels));
    d.n_classes = d.labels.empty() ? 0 : std::size_t{*std::max_element(d.labels.begin(), d.labels.end())} + 1;
    return d;
}

IdxDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto img = read_maybe_gzip(images_path);
    const auto lbl = read_maybe_gzip(labels_path);
    return parse_idx(img, lbl, images_path.string(), labels_path.string());
}

std::vector<std::uint8_t> encode_idx_images(const IdxDataset& data) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + data.pixels.size());
    put_be32(out, kIdxImageMagic);
    put_be32(out, static_cast<std::uint32_t>(data.count));
    put_be32(out, static_cast<std::uint32_t>(data.rows));
    put_be32(out, static_cast<std::uint32_t>(data.cols));
    out.insert(out.end(), data.pixels.begin(), data.pixels.end());
    return out;
}

std::vector<std::uint8_t> encode_idx_labels(const IdxDataset& data) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + data.labels.size());
    put_be32(out, kIdxLabelMagic);
    put_be32(out, static_cast<std::uint32_t>(data.labels.size()));
    out.insert(out.end(), data.labels.begin(), data.labels.end());
    return out;
}

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> raw) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        throw IdxIoError("zlib deflate initialisation failed");
    }
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(raw.size())) + 32);
    zs.next_in = const_cast<Bytef*>(raw.data());
    zs.avail_in = static_cast<uInt>(raw.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw IdxIoError("gzip compression failed");
    out.resize(zs.total_out);
    return out;
}

} // namespace adamwarm::train
