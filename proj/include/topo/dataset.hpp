#pragma once

// TOPD dataset files.
//
//   bytes 0..3   magic "TOPD" (0x54 0x4F 0x50 0x44)
//   u32 LE       version = 1
//   u32 LE       record count
//   per record:  u16 nely, u16 nelx, u16 frame count,
//                frames x nely x nelx float32 LE, row-major
//
// Problems live in a JSON sidecar next to the binary file: for "data.topd"
// the sidecar is "data.meta.json".

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "topo/fem.hpp"

namespace topo::probgen {

inline constexpr std::uint32_t kDatasetVersion = 1;

// Stack of density frames stored in single precision.
struct FrameStack {
  int frames = 0;
  int nely = 0;
  int nelx = 0;
  std::vector<float> data;

  size_t frame_size() const { return static_cast<size_t>(nely) * nelx; }
  std::span<const float> frame(int k) const { return {data.data() + k * frame_size(), frame_size()}; }
  std::span<float> frame(int k) { return {data.data() + k * frame_size(), frame_size()}; }
  fem::DensityField field(int k) const;

  bool operator==(const FrameStack&) const = default;
};

struct DatasetRecord {
  fem::Problem problem;
  FrameStack history;

  bool operator==(const DatasetRecord&) const = default;
};

std::filesystem::path sidecar_path(const std::filesystem::path& dataset_path);

// Sequential single-writer. The record count in the header is patched by finish().
class DatasetWriter {
 public:
  explicit DatasetWriter(const std::filesystem::path& path);
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  void append(const FrameStack& history);
  void finish();
  std::uint32_t count() const { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint32_t count_ = 0;
  bool finished_ = false;
};

// Random access over a dataset file. The constructor validates the header and
// indexes record offsets; frames are read from disk on each request.
class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& path);

  struct RecordShape {
    int frames = 0;
    int nely = 0;
    int nelx = 0;
  };

  size_t size() const { return offsets_.size(); }
  RecordShape shape(size_t index) const;
  FrameStack history(size_t index) const;
  std::vector<float> frame(size_t index, int k) const;
  DatasetRecord record(size_t index) const;  // requires the sidecar

  bool has_metadata() const { return !problems_.empty() || size() == 0; }
  const std::vector<fem::Problem>& problems() const { return problems_; }
  const nlohmann::json& metadata() const { return metadata_; }

 private:
  struct Entry {
    std::uint64_t offset = 0;  // first frame byte
    int nely = 0;
    int nelx = 0;
    int frames = 0;
  };
  std::filesystem::path path_;
  std::vector<Entry> offsets_;
  std::vector<fem::Problem> problems_;
  nlohmann::json metadata_;
};

// Writes the binary file and a sidecar listing the problems.
void write_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records,
                   const nlohmann::json& extra_metadata = nlohmann::json::object());

std::vector<DatasetRecord> read_all(const std::filesystem::path& path);

// Volume and bound invariants of a stored history; throws format on violation.
void verify_record(const DatasetRecord& record, double volume_tolerance = 1e-4);

}  // namespace topo::probgen
