#pragma once

#include <cstring>
#include <string>
#include <vector>

#include "pry/common.hpp"

namespace pry {

// Versioned binary container: 8-byte magic, u32 format version, u64 header
// length, JSON header, then 8-byte-aligned raw array blobs. The header's
// "arrays" section indexes the blobs by name/dtype/shape/offset. Datasets
// and checkpoints are both stored in this shape so an upgrade path touches
// one reader.
struct ArrayRecord {
  std::string name;
  std::string dtype;            // "u8" | "u32" | "f32" | "f64"
  std::vector<i64> shape;       // row-major
  u64 offset = 0;               // bytes from start of blob section
  u64 nbytes = 0;
};

class ContainerWriter {
 public:
  ContainerWriter(std::string magic, u32 version);

  // Appends a blob and records it in the index. Returns the array record.
  template <class T>
  void add_array(const std::string& name, const std::string& dtype,
                 std::vector<i64> shape, const std::vector<T>& values) {
    add_raw(name, dtype, std::move(shape),
            reinterpret_cast<const char*>(values.data()),
            values.size() * sizeof(T));
  }

  void add_raw(const std::string& name, const std::string& dtype,
               std::vector<i64> shape, const char* bytes, u64 nbytes);

  // header_json must be an object; the writer inserts the array index under
  // key "arrays". Writes atomically via a temp file + rename.
  void write(const std::string& path, const std::string& header_json) const;

 private:
  std::string magic_;
  u32 version_;
  std::vector<ArrayRecord> index_;
  std::vector<char> blobs_;
};

class ContainerReader {
 public:
  // Validates magic and version (must equal `version` exactly; a mismatch is
  // an Error mentioning both numbers). Corrupt or truncated files fail with
  // a message naming the hole.
  ContainerReader(const std::string& path, const std::string& magic,
                  u32 version);

  const std::string& header_json() const { return header_json_; }
  const std::vector<ArrayRecord>& arrays() const { return index_; }
  bool has_array(const std::string& name) const;
  const ArrayRecord& array_record(const std::string& name) const;

  template <class T>
  std::vector<T> read_array(const std::string& name) const {
    const ArrayRecord& rec = array_record(name);
    require(rec.nbytes % sizeof(T) == 0,
            "container: array '" + name + "' size not a multiple of element");
    std::vector<T> out(rec.nbytes / sizeof(T));
    read_bytes(rec, reinterpret_cast<char*>(out.data()));
    return out;
  }

 private:
  void read_bytes(const ArrayRecord& rec, char* dst) const;

  std::string path_;
  std::string header_json_;
  std::vector<ArrayRecord> index_;
  u64 blob_start_ = 0;
  u64 file_size_ = 0;
};

}  // namespace pry
