// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include "drank/tensor_store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <json.hpp>

namespace drank {

using json = nlohmann::json;

namespace {

constexpr std::string_view kMetadataKey = "__metadata__";

template <typename T>
void put_le(std::uint8_t* out, T value) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    auto bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) out[i] = static_cast<std::uint8_t>(bits >> (8 * i));
}

template <typename T>
T get_le(const std::uint8_t* in) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(in[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

DType parse_dtype(const std::string& s) {
    if (s == "F32") return DType::f32;
    if (s == "F64") return DType::f64;
    throw StoreError(StoreError::Kind::unsupported_dtype, "unsupported dtype '" + s + "'");
}

std::uint64_t checked_product(const std::vector<std::uint64_t>& shape) {
    std::uint64_t n = 1;
    for (auto d : shape) {
        if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
            throw StoreError(StoreError::Kind::malformed_header, "malformed header: shape overflows");
        }
        n *= d;
    }
    return n;
}

[[noreturn]] void malformed(const std::string& why) {
    throw StoreError(StoreError::Kind::malformed_header, "malformed header: " + why);
}

}  // namespace

std::size_t element_size(DType dtype) noexcept { return dtype == DType::f32 ? 4 : 8; }

std::string_view dtype_name(DType dtype) noexcept { return dtype == DType::f32 ? "F32" : "F64"; }

std::uint64_t Tensor::element_count() const noexcept {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

Tensor Tensor::from_matrix(const Matrix& m, DType dtype) {
    Tensor t;
    t.dtype = dtype;
    t.shape = {m.rows(), m.cols()};
    t.bytes.resize(m.size() * element_size(dtype));
    auto v = m.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (dtype == DType::f32) {
            put_le(t.bytes.data() + 4 * i, static_cast<float>(v[i]));
        } else {
            put_le(t.bytes.data() + 8 * i, v[i]);
        }
    }
    return t;
}

Tensor Tensor::from_matrix(const MatrixF32& m) {
    Tensor t;
    t.dtype = DType::f32;
    t.shape = {m.rows(), m.cols()};
    t.bytes.resize(m.size() * 4);
    auto v = m.values();
    for (std::size_t i = 0; i < v.size(); ++i) put_le(t.bytes.data() + 4 * i, v[i]);
    return t;
}

Tensor Tensor::from_vector(std::span<const double> v, DType dtype) {
    Tensor t = from_matrix(Matrix(1, v.size(), std::vector<double>(v.begin(), v.end())), dtype);
    t.shape = {v.size()};
    return t;
}

Matrix Tensor::to_matrix() const {
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (shape.size() == 2) {
        rows = shape[0];
        cols = shape[1];
    } else if (shape.size() == 1) {
        rows = 1;
        cols = shape[0];
    } else {
        throw StoreError(StoreError::Kind::shape_mismatch,
                         "tensor of rank " + std::to_string(shape.size()) + " is not a matrix");
    }
    if (bytes.size() != rows * cols * element_size(dtype)) {
        throw StoreError(StoreError::Kind::shape_mismatch, "tensor payload does not match its shape");
    }
    Matrix m(rows, cols);
    auto out = m.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = dtype == DType::f32 ? static_cast<double>(get_le<float>(bytes.data() + 4 * i))
                                     : get_le<double>(bytes.data() + 8 * i);
    }
    return m;
}

void TensorStore::insert(const std::string& name, Tensor tensor) {
    if (name == kMetadataKey) malformed("tensor name collides with " + std::string(kMetadataKey));
    auto [it, inserted] = tensors_.try_emplace(name, std::move(tensor));
    if (!inserted) throw StoreError(StoreError::Kind::duplicate_name, "duplicate tensor name '" + name + "'");
}

const Tensor& TensorStore::at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw StoreError(StoreError::Kind::missing, "missing tensor '" + name + "'");
    return it->second;
}

Tensor& TensorStore::at(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw StoreError(StoreError::Kind::missing, "missing tensor '" + name + "'");
    return it->second;
}

std::vector<TensorRecord> TensorStore::records() const {
    std::vector<TensorRecord> out;
    out.reserve(tensors_.size());
    std::uint64_t offset = 0;
    for (const auto& [name, t] : tensors_) {
        const std::uint64_t expected = t.element_count() * element_size(t.dtype);
        if (t.bytes.size() != expected) {
            throw StoreError(StoreError::Kind::shape_mismatch,
                             "tensor '" + name + "': payload of " + std::to_string(t.bytes.size()) +
                                 " bytes, shape requires " + std::to_string(expected));
        }
        out.push_back({name, t.dtype, t.shape, {offset, offset + expected}});
        offset += expected;
    }
    return out;
}

std::vector<std::uint8_t> write_store(const TensorStore& store) {
    const auto recs = store.records();
    json header = json::object();
    for (const auto& r : recs) {
        header[r.name] = {{"dtype", dtype_name(r.dtype)},
                          {"shape", r.shape},
                          {"data_offsets", {r.data_offsets.first, r.data_offsets.second}}};
    }
    header[std::string(kMetadataKey)] = store.metadata();
    const std::string text = header.dump();
    const std::uint64_t data_len = recs.empty() ? 0 : recs.back().data_offsets.second;

    std::vector<std::uint8_t> out(8 + text.size() + data_len);
    put_le(out.data(), static_cast<std::uint64_t>(text.size()));
    std::memcpy(out.data() + 8, text.data(), text.size());
    std::uint8_t* data = out.data() + 8 + text.size();
    for (const auto& r : recs) {
        const auto& payload = store.tensors().at(r.name).bytes;
        std::copy(payload.begin(), payload.end(), data + r.data_offsets.first);
    }
    return out;
}

TensorStore read_store(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8) throw StoreError(StoreError::Kind::truncated, "truncated: missing header length");
    const auto header_len = get_le<std::uint64_t>(bytes.data());
    if (header_len > bytes.size() - 8) {
        throw StoreError(StoreError::Kind::truncated, "truncated: header length " + std::to_string(header_len) +
                                                          " exceeds stream of " + std::to_string(bytes.size()) +
                                                          " bytes");
    }
    const std::string_view text(reinterpret_cast<const char*>(bytes.data() + 8), header_len);
    const auto data = bytes.subspan(8 + header_len);

    json header;
    try {
        header = json::parse(text);
    } catch (const json::parse_error& e) {
        malformed(e.what());
    }
    if (!header.is_object()) malformed("top level is not an object");

    TensorStore::Metadata metadata;
    std::vector<TensorRecord> recs;
    for (const auto& [key, value] : header.items()) {
        if (key == kMetadataKey) {
            if (!value.is_object()) malformed("__metadata__ is not an object");
            for (const auto& [mk, mv] : value.items()) {
                if (!mv.is_string()) malformed("metadata value for '" + mk + "' is not a string");
                metadata.emplace(mk, mv.get<std::string>());
            }
            continue;
        }
        if (!value.is_object() || !value.contains("dtype") || !value.contains("shape") ||
            !value.contains("data_offsets")) {
            malformed("record '" + key + "' lacks dtype/shape/data_offsets");
        }
        TensorRecord r;
        r.name = key;
        if (!value["dtype"].is_string()) malformed("dtype of '" + key + "' is not a string");
        r.dtype = parse_dtype(value["dtype"].get<std::string>());
        const auto& shape = value["shape"];
        const auto& offs = value["data_offsets"];
        if (!shape.is_array()) malformed("shape of '" + key + "' is not an array");
        for (const auto& d : shape) {
            if (!d.is_number_unsigned()) malformed("shape of '" + key + "' has a non-integer or negative entry");
            r.shape.push_back(d.get<std::uint64_t>());
        }
        if (!offs.is_array() || offs.size() != 2 || !offs[0].is_number_unsigned() || !offs[1].is_number_unsigned()) {
            malformed("data_offsets of '" + key + "' must be two non-negative integers");
        }
        r.data_offsets = {offs[0].get<std::uint64_t>(), offs[1].get<std::uint64_t>()};
        if (r.data_offsets.second < r.data_offsets.first) malformed("data_offsets of '" + key + "' are reversed");
        const std::uint64_t expected = checked_product(r.shape) * element_size(r.dtype);
        if (r.data_offsets.second - r.data_offsets.first != expected) {
            throw StoreError(StoreError::Kind::shape_mismatch,
                             "tensor '" + key + "': offsets span " +
                                 std::to_string(r.data_offsets.second - r.data_offsets.first) +
                                 " bytes but shape requires " + std::to_string(expected));
        }
        recs.push_back(std::move(r));
    }

    std::sort(recs.begin(), recs.end(), [](const TensorRecord& a, const TensorRecord& b) {
        return a.data_offsets < b.data_offsets;
    });
    std::uint64_t cursor = 0;
    for (const auto& r : recs) {
        if (r.data_offsets.first < cursor) {
            throw StoreError(StoreError::Kind::overlap, "overlap: tensor '" + r.name + "' begins at " +
                                                            std::to_string(r.data_offsets.first) +
                                                            " inside the previous tensor");
        }
        if (r.data_offsets.first > cursor) malformed("gap before tensor '" + r.name + "'");
        if (r.data_offsets.second > data.size()) {
            throw StoreError(StoreError::Kind::truncated, "truncated: tensor '" + r.name + "' ends at byte " +
                                                              std::to_string(r.data_offsets.second) +
                                                              " of a " + std::to_string(data.size()) +
                                                              "-byte data region");
        }
        cursor = r.data_offsets.second;
    }
    if (cursor != data.size()) malformed("trailing bytes after the last tensor");

    TensorStore::TensorMap tensors;
    for (auto& r : recs) {
        Tensor t;
        t.dtype = r.dtype;
        t.shape = std::move(r.shape);
        t.bytes.assign(data.begin() + static_cast<std::ptrdiff_t>(r.data_offsets.first),
                       data.begin() + static_cast<std::ptrdiff_t>(r.data_offsets.second));
        tensors.emplace(r.name, std::move(t));
    }
    return TensorStore(std::move(tensors), std::move(metadata));
}

void save_store(const TensorStore& store, const std::filesystem::path& path) {
    const auto bytes = write_store(store);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError(StoreError::Kind::io, "cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw StoreError(StoreError::Kind::io, "write to '" + path.string() + "' failed");
}

TensorStore load_store(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError(StoreError::Kind::io, "cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_store(bytes);
}

}  // namespace drank
