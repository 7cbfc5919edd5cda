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

#include "masp/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "masp/errors.h"

namespace masp {
namespace {

constexpr char kMagic[8] = {'M', 'A', 'S', 'P', 'C', 'K', 'P', 'T'};

std::uint64_t Fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void PutLe(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t Le(int n, const char* what) {
    Need(n, what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += n;
    return v;
  }

  std::string_view Bytes(std::size_t n, const char* what) {
    Need(n, what);
    std::string_view v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  [[noreturn]] void Fail(const std::string& msg) const {
    throw ParseError("checkpoint parse error at byte " + std::to_string(pos_) +
                     ": " + msg);
  }

 private:
  void Need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      Fail(std::string("truncated while reading ") + what + " (need " +
           std::to_string(n) + " bytes, have " + std::to_string(remaining()) +
           ")");
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

bool operator==(const Checkpoint::Block& a, const Checkpoint::Block& b) {
  if (a.name != b.name || a.kind != b.kind) return false;
  switch (a.kind) {
    case Checkpoint::Kind::kReals:
      // Bitwise, so that NaN payloads and signed zeros compare exactly.
      return a.reals.size() == b.reals.size() &&
             std::memcmp(a.reals.data(), b.reals.data(),
                         a.reals.size() * sizeof(double)) == 0;
    case Checkpoint::Kind::kWords:
      return a.words == b.words;
    case Checkpoint::Kind::kText:
      return a.text == b.text;
  }
  return false;
}

Checkpoint::Block& Checkpoint::Slot(const std::string& name, Kind kind) {
  for (Block& b : blocks_) {
    if (b.name == name) {
      b = Block{name, kind, {}, {}, {}};
      return b;
    }
  }
  blocks_.push_back(Block{name, kind, {}, {}, {}});
  return blocks_.back();
}

const Checkpoint::Block& Checkpoint::Find(const std::string& name,
                                          Kind kind) const {
  for (const Block& b : blocks_) {
    if (b.name != name) continue;
    if (b.kind != kind) {
      throw ParseError("checkpoint block '" + name + "' has unexpected kind");
    }
    return b;
  }
  throw ParseError("checkpoint block '" + name + "' is missing");
}

void Checkpoint::PutReals(const std::string& name,
                          std::span<const double> values) {
  Slot(name, Kind::kReals).reals.assign(values.begin(), values.end());
}

void Checkpoint::PutWords(const std::string& name,
                          std::span<const std::uint64_t> values) {
  Slot(name, Kind::kWords).words.assign(values.begin(), values.end());
}

void Checkpoint::PutText(const std::string& name, std::string text) {
  Slot(name, Kind::kText).text = std::move(text);
}

bool Checkpoint::Has(const std::string& name) const {
  for (const Block& b : blocks_) {
    if (b.name == name) return true;
  }
  return false;
}

const std::vector<double>& Checkpoint::Reals(const std::string& name) const {
  return Find(name, Kind::kReals).reals;
}

const std::vector<std::uint64_t>& Checkpoint::Words(
    const std::string& name) const {
  return Find(name, Kind::kWords).words;
}

const std::string& Checkpoint::Text(const std::string& name) const {
  return Find(name, Kind::kText).text;
}

std::string Checkpoint::Serialize() const {
  std::string out(kMagic, sizeof(kMagic));
  PutLe(out, kFormatVersion, 4);
  PutLe(out, blocks_.size(), 4);
  for (const Block& b : blocks_) {
    PutLe(out, static_cast<std::uint8_t>(b.kind), 1);
    PutLe(out, b.name.size(), 4);
    out += b.name;
    switch (b.kind) {
      case Kind::kReals:
        PutLe(out, b.reals.size(), 8);
        for (double v : b.reals) PutLe(out, std::bit_cast<std::uint64_t>(v), 8);
        break;
      case Kind::kWords:
        PutLe(out, b.words.size(), 8);
        for (std::uint64_t v : b.words) PutLe(out, v, 8);
        break;
      case Kind::kText:
        PutLe(out, b.text.size(), 8);
        out += b.text;
        break;
    }
  }
  PutLe(out, Fnv1a(out), 8);
  return out;
}

Checkpoint Checkpoint::Parse(std::string_view bytes) {
  Reader r(bytes);
  if (r.Bytes(sizeof(kMagic), "magic") !=
      std::string_view(kMagic, sizeof(kMagic))) {
    throw ParseError("checkpoint parse error at byte 0: bad magic");
  }
  const std::uint64_t version = r.Le(4, "version");
  if (version != kFormatVersion) {
    throw ParseError("checkpoint parse error at byte 8: unsupported format "
                     "version " + std::to_string(version) + " (expected " +
                     std::to_string(kFormatVersion) + ")");
  }
  const std::uint64_t count = r.Le(4, "block count");
  Checkpoint ckpt;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t kind = r.Le(1, "block kind");
    if (kind > 2) r.Fail("unknown block kind " + std::to_string(kind));
    const std::uint64_t name_len = r.Le(4, "name length");
    Block b;
    b.name = std::string(r.Bytes(name_len, "block name"));
    b.kind = static_cast<Kind>(kind);
    const std::uint64_t n = r.Le(8, "element count");
    const std::uint64_t width = b.kind == Kind::kText ? 1 : 8;
    if (n > r.remaining() / width) {
      r.Fail("block '" + b.name + "' claims " + std::to_string(n) +
             " elements but the file is too short");
    }
    if (b.kind == Kind::kReals) {
      b.reals.resize(n);
      for (auto& v : b.reals) v = std::bit_cast<double>(r.Le(8, "real"));
    } else if (b.kind == Kind::kWords) {
      b.words.resize(n);
      for (auto& v : b.words) v = r.Le(8, "word");
    } else {
      b.text = std::string(r.Bytes(n, "text"));
    }
    for (const Block& prev : ckpt.blocks_) {
      if (prev.name == b.name) r.Fail("duplicate block '" + b.name + "'");
    }
    ckpt.blocks_.push_back(std::move(b));
  }
  const std::size_t body_end = r.pos();
  const std::uint64_t stored = r.Le(8, "checksum");
  if (stored != Fnv1a(bytes.substr(0, body_end))) {
    throw ParseError("checkpoint parse error at byte " +
                     std::to_string(body_end) + ": checksum mismatch");
  }
  if (r.remaining() != 0) r.Fail("trailing bytes after checksum");
  return ckpt;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = ckpt.Serialize();
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot move checkpoint into place at '" + path.string() +
                  "': " + ec.message());
  }
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return Checkpoint::Parse(ss.str());
}

}  // namespace masp
