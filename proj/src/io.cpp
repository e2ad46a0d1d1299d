#include "almd/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

namespace almd::io {
namespace {

constexpr char kEmbeddingMagic[4] = {'A', 'L', 'M', 'D'};
constexpr char kSnapshotMagic[4] = {'A', 'L', 'M', 'S'};

class Writer {
 public:
  void magic(const char (&m)[4]) {
    for (char c : m) out_.push_back(static_cast<std::byte>(c));
  }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }

  void vector(const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  void matrix(const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
  }

  Bytes finish() {
    const std::uint32_t crc = crc32(out_);
    u32(crc);
    return std::move(out_);
  }

  void reserve(std::size_t n) { out_.reserve(n); }

 private:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
    }
  }

  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  void magic(const char (&m)[4], const char* what) {
    need(4);
    if (std::memcmp(bytes_.data(), m, 4) != 0) {
      throw Error(ErrorCode::kBadMagic, std::string(what) + ": bad magic");
    }
    pos_ = 4;
  }

  // The trailing CRC covers everything before it. It is checked before any
  // payload field is trusted, so a corrupt count cannot drive allocation.
  void check_crc(const char* what) {
    if (bytes_.size() < 8) throw Error(ErrorCode::kTruncated, std::string(what) + ": truncated");
    const auto body = bytes_.first(bytes_.size() - 4);
    std::uint32_t stored = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      stored |= static_cast<std::uint32_t>(bytes_[body.size() + i]) << (8 * i);
    }
    if (crc32(body) != stored) {
      throw Error(ErrorCode::kBadChecksum, std::string(what) + ": checksum mismatch");
    }
    end_ = body.size();
  }

  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

  Vector vector(Eigen::Index n) {
    need(static_cast<std::size_t>(n) * 8);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = f64();
    return v;
  }
  Matrix matrix(Eigen::Index n) {
    need(static_cast<std::size_t>(n * n) * 8);
    Matrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) m(r, c) = f64();
    }
    return m;
  }

  std::size_t remaining() const { return end_ - pos_; }

  void done(const char* what) const {
    if (pos_ != end_) {
      throw Error(ErrorCode::kTruncated, std::string(what) + ": trailing bytes after payload");
    }
  }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw Error(ErrorCode::kTruncated, "unexpected end of payload");
  }

  template <typename T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
  std::size_t end_ = bytes_.size();
};

void check_version(std::uint32_t got, std::uint32_t want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::kVersionMismatch, std::string(what) + ": version " +
                                                 std::to_string(got) + ", expected " +
                                                 std::to_string(want));
  }
}

}  // namespace

std::uint32_t crc32(std::span<const std::byte> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for >4 GiB buffers.
  const auto* p = reinterpret_cast<const Bytef*>(data.data());
  std::size_t left = data.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

Bytes encode_embeddings(const LabeledEmbeddingSet& set) {
  set.validate();
  Writer w;
  w.reserve(24 + set.records.size() * (4 + 4 * set.dim));
  w.magic(kEmbeddingMagic);
  w.u32(kEmbeddingVersion);
  w.u32(set.dim);
  w.u64(set.records.size());
  for (const auto& r : set.records) {
    w.u32(r.label);
    for (Eigen::Index i = 0; i < r.z.size(); ++i) w.f32(static_cast<float>(r.z(i)));
  }
  return w.finish();
}

LabeledEmbeddingSet decode_embeddings(std::span<const std::byte> bytes) {
  Reader r(bytes);
  r.magic(kEmbeddingMagic, "embedding file");
  r.check_crc("embedding file");
  check_version(r.u32(), kEmbeddingVersion, "embedding file");
  LabeledEmbeddingSet set;
  set.dim = r.u32();
  if (set.dim == 0) throw Error(ErrorCode::kBadDimension, "embedding file: dimension 0");
  const std::uint64_t count = r.u64();
  const std::uint64_t record_bytes = 4 + 4ULL * set.dim;
  if (count > r.remaining() / record_bytes || count * record_bytes != r.remaining()) {
    throw Error(ErrorCode::kTruncated, "embedding file: record count disagrees with payload size");
  }
  set.records.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    LabeledRecord rec;
    rec.label = r.u32();
    rec.z.resize(set.dim);
    for (std::uint32_t i = 0; i < set.dim; ++i) rec.z(i) = static_cast<double>(r.f32());
    set.records.push_back(std::move(rec));
  }
  r.done("embedding file");
  return set;
}

Bytes encode_model(const SharedGaussianModel& model) {
  Writer w;
  w.u32(static_cast<std::uint32_t>(model.dim()));
  w.f64(model.ridge());
  w.matrix(model.sigma());
  return w.finish();
}

Bytes encode_snapshot(const ModelSnapshot& s) {
  const auto d = s.shared.dim();
  Writer w;
  w.magic(kSnapshotMagic);
  w.u32(kSnapshotVersion);
  w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(s.registry.threshold()));
  w.f64(s.shared.ridge());
  w.u64(s.registry.size());
  for (const auto& [id, p] : s.registry.prototypes()) {
    w.u32(id);
    w.u32(static_cast<std::uint32_t>(p.state));
    w.u64(p.count);
    w.vector(p.mu);
  }
  w.matrix(s.shared.sigma());
  w.vector(s.background.mu);
  w.matrix(s.background.model.sigma());
  return w.finish();
}

ModelSnapshot decode_snapshot(std::span<const std::byte> bytes) {
  Reader r(bytes);
  r.magic(kSnapshotMagic, "snapshot");
  r.check_crc("snapshot");
  check_version(r.u32(), kSnapshotVersion, "snapshot");
  const auto d = static_cast<Eigen::Index>(r.u32());
  if (d == 0) throw Error(ErrorCode::kBadDimension, "snapshot: dimension 0");
  const std::uint32_t th = r.u32();
  const double ridge = r.f64();
  const std::uint64_t n = r.u64();
  if (n > r.remaining() / (16 + 8 * static_cast<std::uint64_t>(d))) {
    throw Error(ErrorCode::kTruncated, "snapshot: class table larger than payload");
  }
  std::vector<ClassPrototype> initial;
  std::vector<ClassPrototype> learned;
  for (std::uint64_t k = 0; k < n; ++k) {
    ClassPrototype p;
    p.id = r.u32();
    const std::uint32_t state = r.u32();
    if (state > static_cast<std::uint32_t>(ClassState::kWellLearned)) {
      throw Error(ErrorCode::kProtocol, "snapshot: unknown class state " + std::to_string(state));
    }
    p.state = static_cast<ClassState>(state);
    p.count = r.u64();
    p.mu = r.vector(d);
    (p.state == ClassState::kInitial ? initial : learned).push_back(std::move(p));
  }
  Matrix sigma = r.matrix(d);
  Vector mu_c = r.vector(d);
  Matrix sigma_c = r.matrix(d);
  r.done("snapshot");

  ClassRegistry registry(std::move(initial), th);
  for (auto& p : learned) {
    if ((p.count >= th) != (p.state == ClassState::kWellLearned)) {
      throw Error(ErrorCode::kProtocol, "snapshot: class state disagrees with its count");
    }
    registry.put(std::move(p));
  }
  return {std::move(registry), SharedGaussianModel(std::move(sigma), ridge),
          BackgroundModel{std::move(mu_c), SharedGaussianModel(std::move(sigma_c), ridge)}};
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  Bytes bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string());
  }
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename onto " + path.string() + ": " + ec.message());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

LabeledEmbeddingSet read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(read_file(path));
}

void write_embeddings(const std::filesystem::path& path, const LabeledEmbeddingSet& set) {
  write_file_atomic(path, encode_embeddings(set));
}

ModelSnapshot read_snapshot(const std::filesystem::path& path) {
  return decode_snapshot(read_file(path));
}

void write_snapshot(const std::filesystem::path& path, const ModelSnapshot& snapshot) {
  write_file_atomic(path, encode_snapshot(snapshot));
}

}  // namespace almd::io
