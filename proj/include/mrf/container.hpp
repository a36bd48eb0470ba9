#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mrf/errors.hpp"
#include "mrf/nd_array.hpp"

// .mrfa container: "MRFA" | u32 version=1 | u32 header_len | UTF-8 JSON header
// {dtype, shape, meta} | raw little-endian payload. Round trips are bit-exact.

namespace mrf {

inline constexpr char kContainerMagic[4] = {'M', 'R', 'F', 'A'};
inline constexpr std::uint32_t kContainerVersion = 1;

struct ArrayFile {
  std::string dtype;  // "c128" | "f64" | "i64"
  std::vector<std::int64_t> shape;
  nlohmann::json meta;
  std::variant<ComplexArray, RealArray, IntArray> array;

  const ComplexArray& c128() const { return std::get<ComplexArray>(array); }
  const RealArray& f64() const { return std::get<RealArray>(array); }
  const IntArray& i64() const { return std::get<IntArray>(array); }
};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

template <typename T>
void write_container(const std::string& path, const char* dtype,
                     const std::vector<std::int64_t>& shape, const T* data, std::size_t count,
                     const nlohmann::json& meta) {
  nlohmann::json header;
  header["dtype"] = dtype;
  header["shape"] = shape;
  header["meta"] = meta.is_null() ? nlohmann::json::object() : meta;
  const std::string hs = header.dump();

  std::string preamble;
  preamble.append(kContainerMagic, 4);
  put_u32_le(preamble, kContainerVersion);
  put_u32_le(preamble, static_cast<std::uint32_t>(hs.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("container: cannot open for writing: " + path);
  f.write(preamble.data(), static_cast<std::streamsize>(preamble.size()));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!f) throw IoError("container: write failed: " + path);
}

}  // namespace detail

inline void write_array(const std::string& path, const ComplexArray& arr,
                        const nlohmann::json& meta = {}) {
  if (!all_finite(arr.data(), arr.size()))
    throw NumericalError("container: non-finite values present: " + path);
  detail::write_container(path, "c128", arr.shape(), arr.data(), arr.size(), meta);
}

inline void write_array(const std::string& path, const RealArray& arr,
                        const nlohmann::json& meta = {}) {
  if (!all_finite(arr.data(), arr.size()))
    throw NumericalError("container: non-finite values present: " + path);
  detail::write_container(path, "f64", arr.shape(), arr.data(), arr.size(), meta);
}

inline void write_array(const std::string& path, const IntArray& arr,
                        const nlohmann::json& meta = {}) {
  detail::write_container(path, "i64", arr.shape(), arr.data(), arr.size(), meta);
}

inline ArrayFile read_array(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("container: cannot open: " + path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());

  if (raw.size() < 12) throw TruncatedError("container: file shorter than preamble: " + path);
  if (std::memcmp(raw.data(), kContainerMagic, 4) != 0)
    throw BadMagicError("container: bad magic: " + path);
  const std::uint32_t version = detail::get_u32_le(raw.data() + 4);
  if (version != kContainerVersion)
    throw BadVersionError("container: unsupported version " + std::to_string(version) + ": " +
                          path);
  const std::uint32_t header_len = detail::get_u32_le(raw.data() + 8);
  if (raw.size() < 12 + static_cast<std::size_t>(header_len))
    throw TruncatedError("container: truncated header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(raw.begin() + 12, raw.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("container: header is not valid JSON: ") + e.what());
  }

  ArrayFile out;
  out.dtype = header.at("dtype").get<std::string>();
  out.shape = header.at("shape").get<std::vector<std::int64_t>>();
  out.meta = header.value("meta", nlohmann::json::object());

  const std::size_t count = NDArray<double>::checked_size(out.shape);
  std::size_t elem_size = 0;
  if (out.dtype == "c128")
    elem_size = 16;
  else if (out.dtype == "f64" || out.dtype == "i64")
    elem_size = 8;
  else
    throw FormatError("container: unknown dtype '" + out.dtype + "': " + path);

  const unsigned char* payload = raw.data() + 12 + header_len;
  const std::size_t available = raw.size() - 12 - header_len;
  if (available < count * elem_size)
    throw TruncatedError("container: truncated payload (" + std::to_string(available) + " of " +
                         std::to_string(count * elem_size) + " bytes): " + path);

  if (out.dtype == "c128") {
    ComplexArray a(out.shape);
    std::memcpy(a.data(), payload, count * 16);
    out.array = std::move(a);
  } else if (out.dtype == "f64") {
    RealArray a(out.shape);
    std::memcpy(a.data(), payload, count * 8);
    out.array = std::move(a);
  } else {
    IntArray a(out.shape);
    std::memcpy(a.data(), payload, count * 8);
    out.array = std::move(a);
  }
  return out;
}

}  // namespace mrf
