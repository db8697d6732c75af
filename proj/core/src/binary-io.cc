// core/src/binary-io.cc

// Copyright 2026  The svtk Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "svtk/binary-io.h"

#include <algorithm>
#include <bit>
#include <cstring>

namespace svtk {

namespace {

template <typename T>
T ToLittleEndian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

}  // namespace

BinaryWriter::BinaryWriter(const std::string &path, std::string_view magic)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open " + path + " for writing");
  WriteBytes(magic.data(), magic.size());
}

void BinaryWriter::WriteBytes(const void *data, std::size_t n) {
  out_.write(static_cast<const char *>(data),
             static_cast<std::streamsize>(n));
  if (!out_) throw IoError("write failed: " + path_);
}

void BinaryWriter::WriteU32(std::uint32_t value) {
  value = ToLittleEndian(value);
  WriteBytes(&value, sizeof(value));
}

void BinaryWriter::WriteF32(float value) {
  value = ToLittleEndian(value);
  WriteBytes(&value, sizeof(value));
}

void BinaryWriter::WriteF64(double value) {
  value = ToLittleEndian(value);
  WriteBytes(&value, sizeof(value));
}

void BinaryWriter::WriteMatrixF64(const Matrix &m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) WriteF64(m(r, c));
}

void BinaryWriter::WriteVectorF64(const Vector &v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) WriteF64(v(i));
}

void BinaryWriter::Close() {
  out_.flush();
  if (!out_) throw IoError("write failed: " + path_);
  out_.close();
}

BinaryReader::BinaryReader(const std::string &path, std::string_view magic)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open " + path);
  in_.seekg(0, std::ios::end);
  size_ = static_cast<std::uint64_t>(in_.tellg());
  in_.seekg(0, std::ios::beg);
  std::string found(magic.size(), '\0');
  if (size_ < magic.size()) throw FormatError(path + ": file too short");
  ReadBytes(found.data(), found.size());
  if (found != magic)
    throw FormatError(path + ": bad magic (expected " + std::string(magic) +
                      ")");
}

void BinaryReader::ReadBytes(void *data, std::size_t n) {
  in_.read(static_cast<char *>(data), static_cast<std::streamsize>(n));
  if (!in_) throw FormatError(path_ + ": truncated payload");
}

std::uint32_t BinaryReader::ReadU32() {
  std::uint32_t value;
  ReadBytes(&value, sizeof(value));
  return ToLittleEndian(value);
}

float BinaryReader::ReadF32() {
  float value;
  ReadBytes(&value, sizeof(value));
  return ToLittleEndian(value);
}

double BinaryReader::ReadF64() {
  double value;
  ReadBytes(&value, sizeof(value));
  return ToLittleEndian(value);
}

Matrix BinaryReader::ReadMatrixF64(Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<std::uint64_t>(rows) * cols * 8 > Remaining())
    throw FormatError(path_ + ": payload shorter than declared dimensions");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = ReadF64();
  return m;
}

Vector BinaryReader::ReadVectorF64(Eigen::Index n) {
  if (static_cast<std::uint64_t>(n) * 8 > Remaining())
    throw FormatError(path_ + ": payload shorter than declared dimensions");
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = ReadF64();
  return v;
}

std::uint64_t BinaryReader::Remaining() {
  return size_ - static_cast<std::uint64_t>(in_.tellg());
}

void BinaryReader::ExpectEnd() {
  if (Remaining() != 0)
    throw FormatError(path_ + ": trailing bytes after declared payload");
}

}  // namespace svtk
