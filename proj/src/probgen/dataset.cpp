#include "topo/dataset.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>

#include "topo/problem_json.hpp"

namespace topo::probgen {

static_assert(std::endian::native == std::endian::little, "dataset I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 4> kMagic = {'T', 'O', 'P', 'D'};
constexpr std::uint64_t kHeaderBytes = 12;
constexpr std::uint64_t kRecordHeaderBytes = 6;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(const char* bytes) {
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::string at_offset(std::uint64_t offset) { return " at byte offset " + std::to_string(offset); }

}  // namespace

fem::DensityField FrameStack::field(int k) const {
  fem::DensityField f(nely, nelx);
  const auto src = frame(k);
  for (size_t i = 0; i < src.size(); ++i) f.values[i] = src[i];
  return f;
}

std::filesystem::path sidecar_path(const std::filesystem::path& dataset_path) {
  std::filesystem::path p = dataset_path;
  p.replace_extension(".meta.json");
  return p;
}

DatasetWriter::DatasetWriter(const std::filesystem::path& path) : path_(path) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out_.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out_, kDatasetVersion);
  put<std::uint32_t>(out_, 0);
}

DatasetWriter::~DatasetWriter() {
  if (!finished_) {
    try {
      finish();
    } catch (...) {
    }
  }
}

void DatasetWriter::append(const FrameStack& history) {
  if (finished_) fail(ErrorKind::io, "append after finish");
  if (history.nely > 0xFFFF || history.nelx > 0xFFFF || history.frames > 0xFFFF) {
    fail(ErrorKind::invalid_input, "record dimensions exceed u16 range");
  }
  if (history.data.size() != history.frame_size() * history.frames) {
    fail(ErrorKind::invalid_input, "frame stack size does not match its shape");
  }
  put<std::uint16_t>(out_, static_cast<std::uint16_t>(history.nely));
  put<std::uint16_t>(out_, static_cast<std::uint16_t>(history.nelx));
  put<std::uint16_t>(out_, static_cast<std::uint16_t>(history.frames));
  out_.write(reinterpret_cast<const char*>(history.data.data()),
             static_cast<std::streamsize>(history.data.size() * sizeof(float)));
  if (!out_) fail(ErrorKind::io, "write failed on " + path_.string());
  ++count_;
}

void DatasetWriter::finish() {
  if (finished_) return;
  finished_ = true;
  out_.seekp(8);
  put<std::uint32_t>(out_, count_);
  out_.close();
  if (!out_) fail(ErrorKind::io, "cannot finalize " + path_.string());
}

DatasetReader::DatasetReader(const std::filesystem::path& path) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  const std::uint64_t file_size = std::filesystem::file_size(path);

  char header[kHeaderBytes];
  in.read(header, kHeaderBytes);
  if (in.gcount() < 4 || std::memcmp(header, kMagic.data(), 4) != 0) {
    fail(ErrorKind::format, "bad magic" + at_offset(0) + " in " + path.string());
  }
  if (in.gcount() < static_cast<std::streamsize>(kHeaderBytes)) {
    fail(ErrorKind::format, "truncated header" + at_offset(static_cast<std::uint64_t>(in.gcount())));
  }
  const auto version = get<std::uint32_t>(header + 4);
  if (version != kDatasetVersion) {
    fail(ErrorKind::format, "unsupported version " + std::to_string(version) + at_offset(4));
  }
  const auto count = get<std::uint32_t>(header + 8);

  std::uint64_t offset = kHeaderBytes;
  offsets_.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    if (offset + kRecordHeaderBytes > file_size) {
      fail(ErrorKind::format, "truncated header of record " + std::to_string(i) + at_offset(offset));
    }
    char rh[kRecordHeaderBytes];
    in.seekg(static_cast<std::streamoff>(offset));
    in.read(rh, kRecordHeaderBytes);
    Entry e;
    e.nely = get<std::uint16_t>(rh);
    e.nelx = get<std::uint16_t>(rh + 2);
    e.frames = get<std::uint16_t>(rh + 4);
    e.offset = offset + kRecordHeaderBytes;
    const std::uint64_t bytes = static_cast<std::uint64_t>(e.nely) * e.nelx * e.frames * sizeof(float);
    if (e.offset + bytes > file_size) {
      fail(ErrorKind::format, "truncated record " + std::to_string(i) + at_offset(e.offset) +
                                  ": expected " + std::to_string(bytes) + " bytes, " +
                                  std::to_string(file_size - e.offset) + " available");
    }
    offsets_.push_back(e);
    offset = e.offset + bytes;
  }
  if (offset != file_size) {
    fail(ErrorKind::format, "trailing bytes after last record" + at_offset(offset));
  }

  const auto meta = sidecar_path(path);
  if (std::filesystem::exists(meta)) {
    std::ifstream min(meta);
    try {
      metadata_ = nlohmann::json::parse(min);
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorKind::format, "malformed sidecar " + meta.string() + ": " + ex.what());
    }
    for (const auto& r : metadata_.at("records")) problems_.push_back(r.at("problem").get<fem::Problem>());
    if (problems_.size() != offsets_.size()) {
      fail(ErrorKind::format, "sidecar lists " + std::to_string(problems_.size()) + " problems, file has " +
                                  std::to_string(offsets_.size()) + " records");
    }
  }
}

DatasetReader::RecordShape DatasetReader::shape(size_t index) const {
  if (index >= offsets_.size()) fail(ErrorKind::invalid_input, "record index out of range");
  const Entry& e = offsets_[index];
  return {e.frames, e.nely, e.nelx};
}

std::vector<float> DatasetReader::frame(size_t index, int k) const {
  if (index >= offsets_.size()) fail(ErrorKind::invalid_input, "record index out of range");
  const Entry& e = offsets_[index];
  if (k < 0 || k >= e.frames) fail(ErrorKind::invalid_input, "frame index out of range");
  const size_t n = static_cast<size_t>(e.nely) * e.nelx;
  std::vector<float> out(n);
  const std::uint64_t offset = e.offset + static_cast<std::uint64_t>(k) * n * sizeof(float);
  std::ifstream in(path_, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(offset));
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) fail(ErrorKind::io, "short read of record " + std::to_string(index) + at_offset(offset));
  return out;
}

FrameStack DatasetReader::history(size_t index) const {
  if (index >= offsets_.size()) fail(ErrorKind::invalid_input, "record index out of range");
  const Entry& e = offsets_[index];
  FrameStack s;
  s.frames = e.frames;
  s.nely = e.nely;
  s.nelx = e.nelx;
  s.data.resize(s.frame_size() * s.frames);
  std::ifstream in(path_, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(e.offset));
  in.read(reinterpret_cast<char*>(s.data.data()), static_cast<std::streamsize>(s.data.size() * sizeof(float)));
  if (!in) fail(ErrorKind::io, "short read of record " + std::to_string(index) + at_offset(e.offset));
  return s;
}

DatasetRecord DatasetReader::record(size_t index) const {
  if (problems_.size() != offsets_.size()) {
    fail(ErrorKind::format, "no sidecar metadata for " + path_.string());
  }
  return {problems_.at(index), history(index)};
}

void write_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records,
                   const nlohmann::json& extra_metadata) {
  DatasetWriter writer(path);
  nlohmann::json meta = extra_metadata;
  meta["format"] = "TOPD";
  meta["version"] = kDatasetVersion;
  meta["records"] = nlohmann::json::array();
  for (size_t i = 0; i < records.size(); ++i) {
    writer.append(records[i].history);
    meta["records"].push_back({{"index", i}, {"problem", records[i].problem}});
  }
  writer.finish();
  std::ofstream out(sidecar_path(path));
  out << meta.dump(1) << '\n';
  if (!out) fail(ErrorKind::io, "cannot write sidecar for " + path.string());
}

std::vector<DatasetRecord> read_all(const std::filesystem::path& path) {
  DatasetReader reader(path);
  std::vector<DatasetRecord> out;
  out.reserve(reader.size());
  for (size_t i = 0; i < reader.size(); ++i) out.push_back(reader.record(i));
  return out;
}

void verify_record(const DatasetRecord& record, double volume_tolerance) {
  const FrameStack& h = record.history;
  if (h.nely != record.problem.nely || h.nelx != record.problem.nelx) {
    fail(ErrorKind::format, "record grid does not match its problem");
  }
  for (int k = 0; k < h.frames; ++k) {
    double sum = 0.0;
    for (float v : h.frame(k)) {
      if (!(v >= 0.0f && v <= 1.0f)) fail(ErrorKind::format, "density outside [0, 1] in frame " + std::to_string(k));
      sum += v;
    }
    const double mean = sum / static_cast<double>(h.frame_size());
    if (std::abs(mean - record.problem.volume_fraction) > volume_tolerance) {
      fail(ErrorKind::format, "frame " + std::to_string(k) + " mean density " + std::to_string(mean) +
                                  " differs from target " + std::to_string(record.problem.volume_fraction));
    }
  }
}

}  // namespace topo::probgen
