#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "melidar/core_model.hpp"

namespace melidar {

struct FormatError : Error {
    using Error::Error;
};
struct TruncationError : Error {
    using Error::Error;
};
struct UnsupportedDtype : Error {
    using Error::Error;
};
struct ParseError : Error {
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line(line) {}
    std::size_t line;
};

enum class DType : std::uint32_t { F32 = 1, U32 = 2, U8 = 3 };

std::size_t dtype_size(DType t);
std::string dtype_name(DType t);

template <typename T>
constexpr DType dtype_of() {
    if constexpr (std::is_same_v<T, float>) return DType::F32;
    else if constexpr (std::is_same_v<T, std::uint32_t>) return DType::U32;
    else {
        static_assert(std::is_same_v<T, std::uint8_t>, "unsupported element type");
        return DType::U8;
    }
}

/// Row-major n-dimensional array with a JSON side-car describing it.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::uint64_t> dims, DType dtype);

    template <typename T>
    static Tensor zeros(std::vector<std::uint64_t> dims) {
        return Tensor(std::move(dims), dtype_of<T>());
    }

    [[nodiscard]] const std::vector<std::uint64_t>& dims() const { return dims_; }
    [[nodiscard]] DType dtype() const { return dtype_; }
    [[nodiscard]] std::size_t ndim() const { return dims_.size(); }
    [[nodiscard]] std::size_t numel() const;
    [[nodiscard]] std::span<const std::byte> bytes() const { return bytes_; }
    [[nodiscard]] std::span<std::byte> bytes() { return bytes_; }

    template <typename T>
    [[nodiscard]] std::span<T> as() {
        check_type(dtype_of<std::remove_const_t<T>>());
        return {reinterpret_cast<T*>(bytes_.data()), numel()};
    }
    template <typename T>
    [[nodiscard]] std::span<const T> as() const {
        check_type(dtype_of<std::remove_const_t<T>>());
        return {reinterpret_cast<const T*>(bytes_.data()), numel()};
    }

    nlohmann::json meta = nlohmann::json::object();

    bool operator==(const Tensor& o) const {
        return dims_ == o.dims_ && dtype_ == o.dtype_ && bytes_ == o.bytes_ && meta == o.meta;
    }

private:
    friend Tensor read_tensor(const std::filesystem::path& path);
    void check_type(DType t) const;

    std::vector<std::uint64_t> dims_;
    DType dtype_ = DType::F32;
    std::vector<std::byte> bytes_;
};

/// Serializes to the "MELT" container (version 1, little-endian).
std::vector<std::byte> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::byte> buf);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Label files: one JSON object per line.
// ---------------------------------------------------------------------------

std::vector<OrientedBox3D> parse_labels(const std::string& text);
std::string format_labels(std::span<const OrientedBox3D> boxes);

std::vector<OrientedBox3D> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, std::span<const OrientedBox3D> boxes);

}  // namespace melidar
