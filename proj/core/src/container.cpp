#include "pry/container.hpp"

#include <cstdio>
#include <filesystem>

#include <json.hpp>

namespace pry {
namespace {

using nlohmann::json;

constexpr u64 kAlign = 8;

u64 aligned(u64 n) { return (n + kAlign - 1) / kAlign * kAlign; }

void put_u32(std::vector<char>& out, u32 v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.insert(out.end(), b, b + 4);
}

void put_u64(std::vector<char>& out, u64 v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.insert(out.end(), b, b + 8);
}

}  // namespace

ContainerWriter::ContainerWriter(std::string magic, u32 version)
    : magic_(std::move(magic)), version_(version) {
  require(magic_.size() == 8, "container: magic must be 8 bytes");
}

void ContainerWriter::add_raw(const std::string& name, const std::string& dtype,
                              std::vector<i64> shape, const char* bytes,
                              u64 nbytes) {
  for (const ArrayRecord& r : index_)
    require(r.name != name, "container: duplicate array '" + name + "'");
  ArrayRecord rec;
  rec.name = name;
  rec.dtype = dtype;
  rec.shape = std::move(shape);
  rec.offset = aligned(blobs_.size());
  rec.nbytes = nbytes;
  blobs_.resize(rec.offset, 0);
  if (nbytes > 0) blobs_.insert(blobs_.end(), bytes, bytes + nbytes);
  index_.push_back(std::move(rec));
}

void ContainerWriter::write(const std::string& path,
                            const std::string& header_json) const {
  json header = json::parse(header_json);
  require(header.is_object(), "container: header must be a JSON object");
  json arrays = json::array();
  for (const ArrayRecord& r : index_) {
    arrays.push_back({{"name", r.name},
                      {"dtype", r.dtype},
                      {"shape", r.shape},
                      {"offset", r.offset},
                      {"nbytes", r.nbytes}});
  }
  header["arrays"] = std::move(arrays);
  const std::string hdr = header.dump();

  std::vector<char> head;
  head.insert(head.end(), magic_.begin(), magic_.end());
  put_u32(head, version_);
  put_u64(head, hdr.size());
  head.insert(head.end(), hdr.begin(), hdr.end());
  const u64 blob_start = aligned(head.size());

  const std::string tmp = path + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  require(f != nullptr, "container: cannot open " + tmp + " for writing");
  bool ok = std::fwrite(head.data(), 1, head.size(), f) == head.size();
  for (u64 i = head.size(); ok && i < blob_start; ++i)
    ok = std::fputc(0, f) != EOF;
  if (ok && !blobs_.empty())
    ok = std::fwrite(blobs_.data(), 1, blobs_.size(), f) == blobs_.size();
  ok = std::fclose(f) == 0 && ok;
  require(ok, "container: short write to " + tmp);
  std::filesystem::rename(tmp, path);
}

ContainerReader::ContainerReader(const std::string& path,
                                 const std::string& magic, u32 version)
    : path_(path) {
  require(magic.size() == 8, "container: magic must be 8 bytes");
  std::FILE* f = std::fopen(path.c_str(), "rb");
  require(f != nullptr, "container: cannot open " + path);
  struct Closer {
    std::FILE* f;
    ~Closer() { std::fclose(f); }
  } closer{f};

  std::fseek(f, 0, SEEK_END);
  file_size_ = static_cast<u64>(std::ftell(f));
  std::fseek(f, 0, SEEK_SET);

  char got_magic[8];
  require(file_size_ >= 20 && std::fread(got_magic, 1, 8, f) == 8,
          "container: " + path + " truncated before magic");
  require(std::memcmp(got_magic, magic.data(), 8) == 0,
          "container: " + path + " has wrong magic (expected '" + magic +
              "', got '" + std::string(got_magic, 8) + "')");

  u32 got_version = 0;
  u64 hdr_len = 0;
  require(std::fread(&got_version, 4, 1, f) == 1 &&
              std::fread(&hdr_len, 8, 1, f) == 1,
          "container: " + path + " truncated header fields");
  require(got_version == version,
          "container: " + path + " format version " +
              std::to_string(got_version) + " != expected " +
              std::to_string(version));
  require(20 + hdr_len <= file_size_,
          "container: " + path + " header length exceeds file size");

  header_json_.resize(hdr_len);
  require(std::fread(header_json_.data(), 1, hdr_len, f) == hdr_len,
          "container: " + path + " truncated JSON header");
  blob_start_ = aligned(20 + hdr_len);

  json header;
  try {
    header = json::parse(header_json_);
  } catch (const json::exception& e) {
    fail("container: " + path + " header is not valid JSON: " + e.what());
  }
  require(header.is_object() && header.contains("arrays"),
          "container: " + path + " header missing 'arrays' index");
  for (const json& a : header["arrays"]) {
    ArrayRecord rec;
    rec.name = a.at("name").get<std::string>();
    rec.dtype = a.at("dtype").get<std::string>();
    rec.shape = a.at("shape").get<std::vector<i64>>();
    rec.offset = a.at("offset").get<u64>();
    rec.nbytes = a.at("nbytes").get<u64>();
    require(blob_start_ + rec.offset + rec.nbytes <= file_size_,
            "container: " + path + " array '" + rec.name +
                "' extends past end of file");
    index_.push_back(std::move(rec));
  }
}

bool ContainerReader::has_array(const std::string& name) const {
  for (const ArrayRecord& r : index_)
    if (r.name == name) return true;
  return false;
}

const ArrayRecord& ContainerReader::array_record(const std::string& name) const {
  for (const ArrayRecord& r : index_)
    if (r.name == name) return r;
  fail("container: " + path_ + " has no array '" + name + "'");
}

void ContainerReader::read_bytes(const ArrayRecord& rec, char* dst) const {
  std::FILE* f = std::fopen(path_.c_str(), "rb");
  require(f != nullptr, "container: cannot reopen " + path_);
  std::fseek(f, static_cast<long>(blob_start_ + rec.offset), SEEK_SET);
  const bool ok = std::fread(dst, 1, rec.nbytes, f) == rec.nbytes;
  std::fclose(f);
  require(ok, "container: short read of array '" + rec.name + "'");
}

}  // namespace pry
