/*
 * Copyright 2026 The leadxfer Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "leadxfer/model/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "leadxfer/util/errors.hpp"
#include "leadxfer/util/io.hpp"

namespace leadxfer::model {

namespace {

constexpr char kMagic[8] = {'L', 'X', 'F', 'R', 'C', 'K', 'P', 'T'};
constexpr const char* kParamPrefix = "param:";
constexpr const char* kBufferPrefix = "buffer:";

template <typename U>
void put(std::vector<char>& out, U v) {
  static_assert(std::is_unsigned_v<U>);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::span<const char> bytes) : bytes_(bytes) {}

  std::span<const char> take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename U>
  U get() {
    auto s = take(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(s[i])) << (8 * i);
    }
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const char> bytes_;
  std::size_t pos_ = 0;
};

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

std::vector<char> encode_checkpoint(const CheckpointBlob& blob) {
  std::vector<char> out(kMagic, kMagic + 8);
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string meta = blob.metadata.dump();
  put<std::uint64_t>(out, meta.size());
  out.insert(out.end(), meta.begin(), meta.end());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(blob.tensors.size()));
  for (const auto& [name, t] : blob.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put<std::uint64_t>(out, d);
    append_f32_le(out, t.data);
  }
  return out;
}

CheckpointBlob decode_checkpoint(std::span<const char> bytes) {
  Reader r(bytes);
  auto magic = r.take(8);
  if (std::memcmp(magic.data(), kMagic, 8) != 0) throw FormatError("not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  CheckpointBlob blob;
  const auto meta_len = r.get<std::uint64_t>();
  auto meta = r.take(meta_len);
  try {
    blob.metadata = nlohmann::json::parse(meta.begin(), meta.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name_bytes = r.take(r.get<std::uint32_t>());
    std::string name(name_bytes.begin(), name_bytes.end());
    ad::Tensor t;
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) t.shape.push_back(r.get<std::uint64_t>());
    t.data.resize(ad::numel(t.shape));
    decode_f32_le(r.take(4 * t.data.size()), t.data);
    if (!blob.tensors.emplace(std::move(name), std::move(t)).second) throw FormatError("duplicate tensor name");
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint tensors");
  return blob;
}

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointBlob& blob) {
  write_file_atomic(path, encode_checkpoint(blob));
}

CheckpointBlob read_checkpoint_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw FormatError("checkpoint not found: " + path.string());
  return decode_checkpoint(read_file_bytes(path));
}

void store_params(const ModelParams& params, CheckpointBlob& blob) {
  blob.metadata["backbone"] = params.config.to_json();
  for (const auto& [name, t] : params.params) {
    ad::Tensor copy(t.shape, t.data);
    blob.tensors[kParamPrefix + name] = std::move(copy);
  }
  for (const auto& [name, t] : params.buffers) {
    ad::Tensor copy(t.shape, t.data);
    blob.tensors[kBufferPrefix + name] = std::move(copy);
  }
}

ModelParams restore_params(const CheckpointBlob& blob) {
  if (!blob.metadata.contains("backbone")) throw FormatError("checkpoint has no backbone config");
  ModelParams out;
  try {
    out.config = BackboneConfig::from_json(blob.metadata.at("backbone"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint backbone config: ") + e.what());
  }
  // Validate names and shapes against a fresh build of the same config.
  const ModelParams reference = build_backbone(out.config, 0);
  for (const auto& [name, t] : blob.tensors) {
    if (starts_with(name, kParamPrefix)) {
      out.params[name.substr(std::strlen(kParamPrefix))] = ad::Tensor(t.shape, t.data);
    } else if (starts_with(name, kBufferPrefix)) {
      out.buffers[name.substr(std::strlen(kBufferPrefix))] = ad::Tensor(t.shape, t.data);
    }
  }
  auto check = [](const auto& want, const auto& got, const char* what) {
    if (want.size() != got.size()) throw FormatError(std::string("checkpoint ") + what + " count mismatch");
    for (const auto& [name, t] : want) {
      auto it = got.find(name);
      if (it == got.end()) throw FormatError(std::string("checkpoint missing ") + what + " '" + name + "'");
      if (it->second.shape != t.shape) {
        throw FormatError("checkpoint " + std::string(what) + " '" + name + "' has shape " +
                          ad::shape_str(it->second.shape) + ", expected " + ad::shape_str(t.shape));
      }
    }
  };
  check(reference.params, out.params, "parameter");
  check(reference.buffers, out.buffers, "buffer");
  out.set_trainable(true);
  return out;
}

}  // namespace leadxfer::model
