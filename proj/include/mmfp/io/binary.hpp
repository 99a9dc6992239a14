#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmfp {

/// Fixed-layout little-endian binary container used by checkpoints and
/// dataset files. No timestamps or map iteration anywhere, so identical
/// inputs produce identical bytes.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    }

    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u8(std::uint8_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }

    void f64_vec(const std::vector<double>& v) {
        u64(v.size());
        if (!v.empty()) raw(v.data(), v.size() * sizeof(double));
    }

    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }

    void magic(const char tag[8]) { raw(tag, 8); }

private:
    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw std::runtime_error("binary write failed");
    }
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw std::runtime_error("cannot open for reading: " + path);
    }

    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, sizeof v);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, sizeof v);
        return v;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        raw(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        raw(&v, sizeof v);
        return v;
    }

    std::vector<double> f64_vec() {
        std::vector<double> v(u64());
        if (!v.empty()) raw(v.data(), v.size() * sizeof(double));
        return v;
    }

    std::string str() {
        std::string s(u64(), '\0');
        raw(s.data(), s.size());
        return s;
    }

    void expect_magic(const char tag[8]) {
        char buf[8];
        raw(buf, 8);
        if (std::memcmp(buf, tag, 8) != 0)
            throw std::runtime_error("bad file magic (expected " + std::string(tag, 8) + ")");
    }

private:
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!in_) throw std::runtime_error("binary read failed (truncated file?)");
    }
    std::ifstream in_;
};

/// FNV-1a, used to stamp emitted files with the digest of their generating
/// configuration.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace mmfp
