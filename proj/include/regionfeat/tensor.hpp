#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace regionfeat {

// Dense row-major array of arbitrary rank. Values are held in double
// precision; the on-disk format stores float32.
struct NdArray {
    std::vector<std::uint32_t> dims;
    std::vector<double> data;

    std::size_t size() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

enum class TensorIoStatus {
    bad_magic,
    dim_overflow,
    truncated,
    io_failure,
};

class TensorIoError : public std::runtime_error {
public:
    TensorIoError(TensorIoStatus status, const std::string& msg)
        : std::runtime_error(msg), status_(status) {}
    TensorIoStatus status() const { return status_; }

private:
    TensorIoStatus status_;
};

namespace detail {

inline constexpr std::uint32_t kMaxTensorRank = 32;
inline constexpr std::uint64_t kMaxTensorElems = std::uint64_t{1} << 31;

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

inline std::uint32_t load_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void store_u32le(std::uint32_t v, unsigned char* p) {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
    p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
    p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

inline std::uint32_t f32_bits(float f) {
    std::uint32_t u;
    static_assert(sizeof(f) == sizeof(u));
    std::memcpy(&u, &f, sizeof(u));
    return u;
}

inline float bits_f32(std::uint32_t u) {
    float f;
    std::memcpy(&f, &u, sizeof(f));
    return f;
}

}  // namespace detail

// Tensor file format ("RFT1"):
//   bytes 0..3   magic "RFT1"
//   bytes 4..7   rank, u32 little-endian
//   then rank x u32 LE dims
//   then product(dims) x f32 LE payload, row-major
inline NdArray read_tensor(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, detail::FileCloser> f(std::fopen(path.string().c_str(), "rb"));
    if (!f) {
        throw TensorIoError(TensorIoStatus::io_failure,
                            "cannot open tensor file: " + path.string());
    }

    unsigned char header[8];
    if (std::fread(header, 1, 8, f.get()) != 8) {
        throw TensorIoError(TensorIoStatus::truncated,
                            "tensor file shorter than header: " + path.string());
    }
    if (std::memcmp(header, "RFT1", 4) != 0) {
        throw TensorIoError(TensorIoStatus::bad_magic, "bad tensor magic in " + path.string());
    }

    const std::uint32_t rank = detail::load_u32le(header + 4);
    if (rank > detail::kMaxTensorRank) {
        throw TensorIoError(TensorIoStatus::dim_overflow,
                            "tensor rank " + std::to_string(rank) + " exceeds limit");
    }

    NdArray out;
    out.dims.resize(rank);
    std::uint64_t elems = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        unsigned char buf[4];
        if (std::fread(buf, 1, 4, f.get()) != 4) {
            throw TensorIoError(TensorIoStatus::truncated,
                                "tensor dims truncated: " + path.string());
        }
        out.dims[i] = detail::load_u32le(buf);
        elems *= out.dims[i];
        if (elems > detail::kMaxTensorElems) {
            throw TensorIoError(TensorIoStatus::dim_overflow,
                                "tensor element count overflows limit: " + path.string());
        }
    }

    out.data.resize(static_cast<std::size_t>(elems));
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        unsigned char buf[4];
        if (std::fread(buf, 1, 4, f.get()) != 4) {
            throw TensorIoError(TensorIoStatus::truncated,
                                "tensor payload truncated: " + path.string());
        }
        out.data[i] = static_cast<double>(detail::bits_f32(detail::load_u32le(buf)));
    }
    return out;
}

inline void write_tensor(const std::filesystem::path& path, const NdArray& array) {
    std::uint64_t elems = 1;
    for (auto d : array.dims) {
        elems *= d;
        if (elems > detail::kMaxTensorElems) {
            throw TensorIoError(TensorIoStatus::dim_overflow,
                                "tensor element count overflows limit: " + path.string());
        }
    }
    if (array.dims.size() > detail::kMaxTensorRank) {
        throw TensorIoError(TensorIoStatus::dim_overflow, "tensor rank exceeds limit");
    }
    if (elems != array.data.size()) {
        throw std::invalid_argument("NdArray data length does not match dims");
    }
    for (double v : array.data) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("refusing to write non-finite tensor value");
        }
    }

    std::unique_ptr<std::FILE, detail::FileCloser> f(std::fopen(path.string().c_str(), "wb"));
    if (!f) {
        throw TensorIoError(TensorIoStatus::io_failure,
                            "cannot open tensor file for writing: " + path.string());
    }

    unsigned char buf[4];
    auto put = [&](const void* p, std::size_t n) {
        if (std::fwrite(p, 1, n, f.get()) != n) {
            throw TensorIoError(TensorIoStatus::io_failure, "short write: " + path.string());
        }
    };
    put("RFT1", 4);
    detail::store_u32le(static_cast<std::uint32_t>(array.dims.size()), buf);
    put(buf, 4);
    for (auto d : array.dims) {
        detail::store_u32le(d, buf);
        put(buf, 4);
    }
    for (double v : array.data) {
        detail::store_u32le(detail::f32_bits(static_cast<float>(v)), buf);
        put(buf, 4);
    }
}

}  // namespace regionfeat
