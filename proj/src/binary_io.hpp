#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "gbq/types.hpp"

namespace gbq::detail {

// Little-endian fixed-width primitives. The reader tracks its byte offset so
// parse errors can point at the failure position.
class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void u8(std::uint8_t v) { raw(&v, 1); }

    void u32(std::uint32_t v) {
        std::uint8_t b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        raw(b, 4);
    }

    void u64(std::uint64_t v) {
        std::uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        raw(b, 8);
    }

    void i32(std::int32_t v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

private:
    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw std::runtime_error("write failed");
    }

    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::size_t offset() const noexcept { return offset_; }

    std::uint8_t u8() {
        std::uint8_t v;
        raw(&v, 1);
        return v;
    }

    std::uint32_t u32() {
        std::uint8_t b[4];
        raw(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        std::uint8_t b[8];
        raw(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }

    std::int32_t i32() { return std::bit_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::string str(std::size_t max_len = 1u << 20) {
        const std::uint32_t len = u32();
        if (len > max_len) throw ParseError("string length out of range", offset_);
        std::string s(len, '\0');
        raw(s.data(), len);
        return s;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(what, offset_);
    }

private:
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw ParseError("unexpected end of stream", offset_);
        offset_ += n;
    }

    std::istream& in_;
    std::size_t offset_ = 0;
};

}  // namespace gbq::detail
