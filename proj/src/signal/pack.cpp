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

#include "leadxfer/signal/pack.hpp"

#include <json.hpp>
#include <set>
#include <string>

#include "leadxfer/util/errors.hpp"
#include "leadxfer/util/io.hpp"

namespace leadxfer::signal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestName = "manifest.json";

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw FormatError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

Dataset load_pack(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  if (!fs::exists(manifest_path)) throw FormatError("missing manifest: " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }

  Dataset out;
  auto& m = out.manifest;
  m.label_names = field<std::vector<std::string>>(doc, "label_names", "manifest");
  m.sampling_rate_hz = field<int>(doc, "sampling_rate_hz", "manifest");
  m.n_leads = field<std::size_t>(doc, "n_leads", "manifest");
  m.length = field<std::size_t>(doc, "length", "manifest");
  const json& recs = doc.at("records");
  if (!recs.is_array()) throw FormatError("manifest: 'records' must be an array");

  for (const json& r : recs) {
    ManifestEntry e;
    e.id = field<std::string>(r, "id", "manifest record");
    const std::string where = "record '" + e.id + "'";
    e.file = field<std::string>(r, "file", where);
    e.fold = field<int>(r, "fold", where);
    e.n_leads = m.n_leads;
    e.length = m.length;
    if (e.fold < 1 || e.fold > kNumFolds) {
      throw FormatError(where + ": fold " + std::to_string(e.fold) + " outside 1..10");
    }
    auto labels = field<std::vector<int>>(r, "labels", where);
    if (labels.size() != m.label_names.size()) {
      throw FormatError(where + ": expected " + std::to_string(m.label_names.size()) + " labels");
    }

    const fs::path bin = dir / e.file;
    if (!fs::exists(bin)) throw FormatError(where + ": missing file " + bin.string());
    const auto expected = 4 * e.n_leads * e.length;
    const auto actual = fs::file_size(bin);
    if (actual != expected) {
      throw FormatError(where + ": " + bin.string() + " has " + std::to_string(actual) + " bytes, expected " +
                        std::to_string(expected));
    }

    EcgRecord rec;
    rec.id = e.id;
    rec.sampling_rate_hz = m.sampling_rate_hz;
    rec.n_leads = e.n_leads;
    rec.length = e.length;
    rec.samples.resize(e.n_leads * e.length);
    decode_f32_le(read_file_bytes(bin), rec.samples);
    for (int y : labels) {
      if (y != 0 && y != 1) throw FormatError(where + ": labels must be 0/1");
      rec.labels.push_back(static_cast<std::uint8_t>(y));
    }
    rec.validate();
    m.records.push_back(std::move(e));
    out.records.push_back(std::move(rec));
  }
  return out;
}

void save_pack(const DatasetManifest& manifest, const std::vector<EcgRecord>& records, const fs::path& dir) {
  if (manifest.records.size() != records.size()) {
    throw std::invalid_argument("save_pack: manifest lists " + std::to_string(manifest.records.size()) +
                                " records but " + std::to_string(records.size()) + " were given");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("save_pack: cannot create " + dir.string());

  json recs = json::array();
  std::set<std::string> ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& e = manifest.records[i];
    const auto& r = records[i];
    r.validate();
    if (e.id != r.id) throw std::invalid_argument("save_pack: manifest id '" + e.id + "' != record id '" + r.id + "'");
    if (!ids.insert(e.id).second) throw std::invalid_argument("save_pack: duplicate id '" + e.id + "'");
    if (r.n_leads != manifest.n_leads || r.length != manifest.length ||
        r.labels.size() != manifest.label_names.size()) {
      throw std::invalid_argument("save_pack: record '" + r.id + "' disagrees with manifest shape");
    }
    std::vector<char> bytes;
    bytes.reserve(4 * r.samples.size());
    append_f32_le(bytes, r.samples);
    write_file_atomic(dir / e.file, bytes);

    json labels = json::array();
    for (auto y : r.labels) labels.push_back(static_cast<int>(y));
    recs.push_back({{"id", e.id}, {"file", e.file}, {"labels", labels}, {"fold", e.fold}});
  }
  json doc = {{"label_names", manifest.label_names},
              {"sampling_rate_hz", manifest.sampling_rate_hz},
              {"n_leads", manifest.n_leads},
              {"length", manifest.length},
              {"records", recs}};
  write_text_atomic(dir / kManifestName, doc.dump(1) + "\n");
}

}  // namespace leadxfer::signal
