// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0
//
// Reader/writer for `.dst` tensor containers.
//
// Layout:
//   [u64 little-endian N][N bytes UTF-8 JSON header][data region]
//
// The header maps each tensor name to {"dtype", "shape", "data_offsets"} and
// may carry a "__metadata__" object of string -> string. Offsets are relative
// to the start of the data region; tensors are packed contiguously in
// lexicographic name order. Elements are little-endian, row-major.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "drank/matrix.hpp"

namespace drank {

enum class DType { f32, f64 };

[[nodiscard]] std::size_t element_size(DType dtype) noexcept;
[[nodiscard]] std::string_view dtype_name(DType dtype) noexcept;

class StoreError : public std::runtime_error {
public:
    enum class Kind { truncated, overlap, malformed_header, duplicate_name, unsupported_dtype, shape_mismatch, missing, io };

    StoreError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

struct TensorRecord {
    std::string name;
    DType dtype = DType::f32;
    std::vector<std::uint64_t> shape;
    std::pair<std::uint64_t, std::uint64_t> data_offsets{0, 0};

    bool operator==(const TensorRecord&) const = default;
};

/// One tensor with its raw little-endian payload.
struct Tensor {
    DType dtype = DType::f32;
    std::vector<std::uint64_t> shape;
    std::vector<std::uint8_t> bytes;

    [[nodiscard]] std::uint64_t element_count() const noexcept;

    static Tensor from_matrix(const Matrix& m, DType dtype);
    static Tensor from_matrix(const MatrixF32& m);
    static Tensor from_vector(std::span<const double> v, DType dtype);

    /// 2-D tensors map directly; 1-D tensors become a single row.
    [[nodiscard]] Matrix to_matrix() const;

    bool operator==(const Tensor&) const = default;
};

class TensorStore {
public:
    using TensorMap = std::map<std::string, Tensor>;
    using Metadata = std::map<std::string, std::string>;

    TensorStore() = default;
    TensorStore(TensorMap tensors, Metadata metadata)
        : tensors_(std::move(tensors)), metadata_(std::move(metadata)) {}

    /// Throws StoreError(duplicate_name) if the name already exists.
    void insert(const std::string& name, Tensor tensor);
    void insert_or_assign(const std::string& name, Tensor tensor) { tensors_.insert_or_assign(name, std::move(tensor)); }

    [[nodiscard]] bool contains(const std::string& name) const { return tensors_.contains(name); }
    /// Throws StoreError(missing).
    [[nodiscard]] const Tensor& at(const std::string& name) const;
    [[nodiscard]] Tensor& at(const std::string& name);
    [[nodiscard]] Matrix matrix(const std::string& name) const { return at(name).to_matrix(); }

    [[nodiscard]] const TensorMap& tensors() const noexcept { return tensors_; }
    [[nodiscard]] const Metadata& metadata() const noexcept { return metadata_; }
    [[nodiscard]] Metadata& metadata() noexcept { return metadata_; }

    /// Records in data-region order, offsets as they would be written.
    [[nodiscard]] std::vector<TensorRecord> records() const;

    bool operator==(const TensorStore&) const = default;

private:
    TensorMap tensors_;
    Metadata metadata_;
};

[[nodiscard]] std::vector<std::uint8_t> write_store(const TensorStore& store);
[[nodiscard]] TensorStore read_store(std::span<const std::uint8_t> bytes);

void save_store(const TensorStore& store, const std::filesystem::path& path);
[[nodiscard]] TensorStore load_store(const std::filesystem::path& path);

}  // namespace drank
