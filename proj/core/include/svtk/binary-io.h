// svtk/binary-io.h

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

#ifndef SVTK_BINARY_IO_H_
#define SVTK_BINARY_IO_H_

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>

#include "svtk/base.h"

namespace svtk {

// Little-endian writer for the toolkit's binary containers. Every container
// starts with a four-byte ASCII magic.
class BinaryWriter {
 public:
  BinaryWriter(const std::string &path, std::string_view magic);

  void WriteU32(std::uint32_t value);
  void WriteF32(float value);
  void WriteF64(double value);
  // Column-major Eigen storage is written row-major.
  void WriteMatrixF64(const Matrix &m);
  void WriteVectorF64(const Vector &v);

  // Flushes and reports write failures; the destructor does not throw.
  void Close();

 private:
  void WriteBytes(const void *data, std::size_t n);

  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  // Throws IoError if the file cannot be opened and FormatError if the magic
  // does not match.
  BinaryReader(const std::string &path, std::string_view magic);

  std::uint32_t ReadU32();
  float ReadF32();
  double ReadF64();
  Matrix ReadMatrixF64(Eigen::Index rows, Eigen::Index cols);
  Vector ReadVectorF64(Eigen::Index n);

  // Bytes left after the current position.
  std::uint64_t Remaining();
  // Throws FormatError unless the whole file has been consumed.
  void ExpectEnd();

  const std::string &path() const { return path_; }

 private:
  void ReadBytes(void *data, std::size_t n);

  std::string path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
};

}  // namespace svtk

#endif  // SVTK_BINARY_IO_H_
