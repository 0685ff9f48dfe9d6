#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

namespace radekit::io {

// Writes to a temporary sibling and renames it into place, so readers never
// observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

// Little-endian binary encoding independent of host byte order.
class ByteWriter {
public:
    template <typename T>
    void put(T value)
    {
        static_assert(std::is_arithmetic_v<T>);
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        U bits;
        std::memcpy(&bits, &value, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buffer_.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
        }
    }

    void put_bytes(std::string_view bytes) { buffer_.append(bytes); }

    std::size_t size() const { return buffer_.size(); }
    const std::string& str() const { return buffer_; }
    std::string take() { return std::move(buffer_); }

private:
    std::string buffer_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    // Throws ErrorKind::truncated when fewer than sizeof(T) bytes remain.
    template <typename T>
    T get()
    {
        static_assert(std::is_arithmetic_v<T>);
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        const std::string_view raw = take(sizeof(T));
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bits |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(raw[i])) << (8 * i));
        }
        T value;
        std::memcpy(&value, &bits, sizeof(T));
        return value;
    }

    std::string_view take(std::size_t n);

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t position() const { return pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace radekit::io
