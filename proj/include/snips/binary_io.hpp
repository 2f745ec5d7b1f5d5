#ifndef SNIPS_BINARY_IO_HPP
#define SNIPS_BINARY_IO_HPP

// Little-endian binary containers:
//   operator: "SNOP" | u16 version | u32 M | u32 N | M·N f64 (row-major)
//   vector:   "SNVC" | u16 version | u32 N | N f64

#include "operators.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

namespace snips::io {

inline constexpr std::uint16_t kOperatorVersion = 1;
inline constexpr std::uint16_t kVectorVersion = 1;

namespace detail {

template <typename T>
T to_little(T value) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    } else {
        return value;
    }
}

template <typename T>
void put(std::ostream& out, T value) {
    const T le = to_little(value);
    out.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

template <typename T>
T get(std::istream& in, std::string_view what) {
    T raw{};
    in.read(reinterpret_cast<char*>(&raw), sizeof(T));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(T)))
        throw ProtocolError("truncated input while reading " + std::string(what));
    return to_little(raw);
}

inline void expect_magic(std::istream& in, std::string_view magic) {
    std::array<char, 4> got{};
    in.read(got.data(), 4);
    if (in.gcount() != 4 || std::string_view(got.data(), 4) != magic)
        throw ProtocolError("bad magic, expected \"" + std::string(magic) + "\"");
}

} // namespace detail

inline void write_operator(std::ostream& out, const LinearOperator& op) {
    out.write("SNOP", 4);
    detail::put<std::uint16_t>(out, kOperatorVersion);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(op.rows()));
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(op.cols()));
    for (Index r = 0; r < op.rows(); ++r)
        for (Index c = 0; c < op.cols(); ++c) detail::put<double>(out, op.matrix()(r, c));
}

inline LinearOperator read_operator(std::istream& in) {
    detail::expect_magic(in, "SNOP");
    const auto version = detail::get<std::uint16_t>(in, "version");
    if (version != kOperatorVersion)
        throw ProtocolError("unsupported operator container version " + std::to_string(version));
    const auto m = detail::get<std::uint32_t>(in, "row count");
    const auto n = detail::get<std::uint32_t>(in, "column count");
    if (m == 0 || n == 0) throw ProtocolError("operator container declares an empty matrix");
    Matrix h(m, n);
    for (Index r = 0; r < h.rows(); ++r)
        for (Index c = 0; c < h.cols(); ++c) h(r, c) = detail::get<double>(in, "operator entry");
    return LinearOperator(std::move(h));
}

inline void write_vector(std::ostream& out, const Eigen::Ref<const Vector>& v) {
    out.write("SNVC", 4);
    detail::put<std::uint16_t>(out, kVectorVersion);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(v.size()));
    for (Index j = 0; j < v.size(); ++j) detail::put<double>(out, v[j]);
}

inline Vector read_vector(std::istream& in) {
    detail::expect_magic(in, "SNVC");
    const auto version = detail::get<std::uint16_t>(in, "version");
    if (version != kVectorVersion)
        throw ProtocolError("unsupported vector container version " + std::to_string(version));
    const auto n = detail::get<std::uint32_t>(in, "length");
    Vector v(n);
    for (Index j = 0; j < v.size(); ++j) v[j] = detail::get<double>(in, "vector entry");
    return v;
}

template <typename Writer, typename Value>
void save_file(const std::string& path, const Value& value, Writer writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    writer(out, value);
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline LinearOperator load_operator(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open operator file " + path);
    return read_operator(in);
}

inline Vector load_vector(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open vector file " + path);
    return read_vector(in);
}

inline void save_operator(const std::string& path, const LinearOperator& op) {
    save_file(path, op, [](std::ostream& o, const LinearOperator& v) { write_operator(o, v); });
}

inline void save_vector(const std::string& path, const Vector& v) {
    save_file(path, v, [](std::ostream& o, const Vector& x) { write_vector(o, x); });
}

} // namespace snips::io

#endif // SNIPS_BINARY_IO_HPP
