// Copyright 2026 The MASP Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MASP_CHECKPOINT_H_
#define MASP_CHECKPOINT_H_

// Self-describing binary checkpoint. All integers little-endian.
//
//   magic      8 bytes  "MASPCKPT"
//   version    u32
//   blocks     u32      number of blocks
//   per block:
//     kind     u8       0 = f64 array, 1 = u64 array, 2 = UTF-8 text
//     name_len u32, name bytes
//     count    u64      element count (bytes for text)
//     payload  count * 8 bytes (count bytes for text)
//   checksum   u64      FNV-1a over every preceding byte

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace masp {

class Checkpoint {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  enum class Kind : std::uint8_t { kReals = 0, kWords = 1, kText = 2 };

  struct Block {
    std::string name;
    Kind kind = Kind::kReals;
    std::vector<double> reals;
    std::vector<std::uint64_t> words;
    std::string text;
    friend bool operator==(const Block& a, const Block& b);
  };

  // Adding a name twice replaces the earlier block in place.
  void PutReals(const std::string& name, std::span<const double> values);
  void PutWords(const std::string& name, std::span<const std::uint64_t> values);
  void PutText(const std::string& name, std::string text);

  bool Has(const std::string& name) const;
  // Throw ParseError when the block is absent or of another kind.
  const std::vector<double>& Reals(const std::string& name) const;
  const std::vector<std::uint64_t>& Words(const std::string& name) const;
  const std::string& Text(const std::string& name) const;

  const std::vector<Block>& blocks() const { return blocks_; }

  std::string Serialize() const;
  // Throws ParseError naming the byte offset of the first problem.
  static Checkpoint Parse(std::string_view bytes);

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;

 private:
  Block& Slot(const std::string& name, Kind kind);
  const Block& Find(const std::string& name, Kind kind) const;

  std::vector<Block> blocks_;
};

// Writes via a temporary file and rename. Throws IoError.
void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace masp

#endif  // MASP_CHECKPOINT_H_
