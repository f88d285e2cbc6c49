#include "cdms/checkpoint.hpp"

#include <fstream>
#include <iterator>

namespace cdms {

void write_checkpoint_header(ByteWriter& out, ModelKind kind) {
    out.raw(kCheckpointMagic, sizeof(kCheckpointMagic));
    out.u32(kCheckpointVersion);
    out.u32(static_cast<std::uint32_t>(kind));
}

ModelKind read_checkpoint_header(ByteReader& in) {
    char magic[4];
    if (in.remaining() < sizeof(magic)) {
        throw CheckpointError(CheckpointErrorKind::Truncated, "checkpoint is truncated");
    }
    in.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw CheckpointError(CheckpointErrorKind::BadMagic, "not a CDMS checkpoint (bad magic)");
    }
    const std::uint32_t version = in.u32();
    if (version != kCheckpointVersion) {
        throw CheckpointError(CheckpointErrorKind::UnsupportedVersion,
                              "unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint32_t kind = in.u32();
    if (kind < 1 || kind > 3) {
        throw CheckpointError(CheckpointErrorKind::Corrupt, "unknown model kind " + std::to_string(kind));
    }
    return static_cast<ModelKind>(kind);
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ModelKind peek_model_kind(const std::filesystem::path& path) {
    ByteReader in(read_file(path));
    return read_checkpoint_header(in);
}

}  // namespace cdms
