#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "cdms/errors.hpp"

namespace cdms {

// Shared binary container for model checkpoints:
//   "CDMS" | u32 format version | u32 model kind | kind-specific payload
// All integers and floats are little-endian.
inline constexpr char kCheckpointMagic[4] = {'C', 'D', 'M', 'S'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class ModelKind : std::uint32_t { Mlp = 1, Linear = 2, Poly2 = 3 };

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    void f64(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    }

    void raw(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes_.insert(bytes_.end(), p, p + n);
    }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        }
        return v;
    }

    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        }
        return std::bit_cast<double>(bits);
    }

    void raw(void* out, std::size_t n) {
        need(n);
        std::memcpy(out, bytes_.data() + pos_, n);
        pos_ += n;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw CheckpointError(CheckpointErrorKind::Truncated, "checkpoint is truncated");
        }
    }

    std::vector<std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

// Writes magic, version and kind.
void write_checkpoint_header(ByteWriter& out, ModelKind kind);

// Validates magic and version; returns the stored kind.
ModelKind read_checkpoint_header(ByteReader& in);

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Kind stored in a checkpoint file, without parsing the payload.
ModelKind peek_model_kind(const std::filesystem::path& path);

}  // namespace cdms
