#include "c2f/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <set>

namespace c2f::nn {
namespace {

constexpr char kMagic[8] = {'C', '2', 'F', 'C', 'K', 'P', 'T', '\0'};

std::uint64_t Fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void U8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) U8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) U8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }
  void Str(std::string_view s) {
    U32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void Raw(std::string_view s) { out_.append(s); }
  void RowMajor(const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) F64(m(r, c));
    }
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : in_(bytes) {}

  [[noreturn]] void Fail(const std::string& what) const {
    ThrowData("checkpoint corrupt at offset " + std::to_string(pos_) + ": " + what);
  }
  void Need(std::size_t n) const {
    if (in_.size() - pos_ < n) Fail("truncated (need " + std::to_string(n) + " more bytes)");
  }
  std::uint8_t U8() {
    Need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t U64() {
    Need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    return v;
  }
  double F64() { return std::bit_cast<double>(U64()); }
  std::string Str() {
    const std::uint32_t n = U32();
    Need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void RowMajor(Matrix& m) {
    Need(static_cast<std::size_t>(m.size()) * 8);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = F64();
    }
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

Reader OpenVerified(std::string_view bytes, Metadata* meta) {
  if (bytes.size() < sizeof(kMagic) + 4 + 8) {
    ThrowData("checkpoint corrupt at offset 0: file too short (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    ThrowData("checkpoint corrupt at offset 0: bad magic");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  Reader tail(bytes.substr(bytes.size() - 8));
  if (tail.U64() != Fnv1a(body)) {
    ThrowData("checkpoint corrupt at offset " + std::to_string(body.size()) + ": checksum mismatch");
  }
  Reader r(body);
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.U8();
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    ThrowData("checkpoint version " + std::to_string(version) + " unsupported (expected " +
              std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t n_meta = r.U32();
  Metadata local;
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string key = r.Str();
    local[key] = r.Str();
  }
  if (meta != nullptr) *meta = std::move(local);
  return r;
}

}  // namespace

std::string EncodeCheckpoint(const ParameterStore& store, const Adam* optimizer,
                             const Metadata& meta) {
  Writer w;
  w.Raw(std::string_view(kMagic, sizeof(kMagic)));
  w.U32(kCheckpointVersion);
  w.U32(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    w.Str(k);
    w.Str(v);
  }
  w.U32(static_cast<std::uint32_t>(store.all().size()));
  for (const auto& p : store.all()) {
    w.Str(p->name);
    w.U32(static_cast<std::uint32_t>(p->value.rows()));
    w.U32(static_cast<std::uint32_t>(p->value.cols()));
    w.U8(1);
    w.U8(p->is_bias ? 1 : 0);
    w.RowMajor(p->value);
  }
  if (optimizer == nullptr) {
    w.U32(0);
  } else {
    w.U32(static_cast<std::uint32_t>(optimizer->slots().size()));
    for (const auto& [name, slot] : optimizer->slots()) {
      w.Str(name);
      w.U64(static_cast<std::uint64_t>(slot.step));
      w.U32(static_cast<std::uint32_t>(slot.m.rows()));
      w.U32(static_cast<std::uint32_t>(slot.m.cols()));
      w.RowMajor(slot.m);
      w.RowMajor(slot.v);
    }
  }
  const std::uint64_t checksum = Fnv1a(w.bytes());
  w.U64(checksum);
  return std::move(w.bytes());
}

Metadata PeekCheckpointMetadata(std::string_view bytes) {
  Metadata meta;
  OpenVerified(bytes, &meta);
  return meta;
}

void DecodeCheckpoint(std::string_view bytes, ParameterStore& store, Adam* optimizer,
                      Metadata* meta) {
  Reader r = OpenVerified(bytes, meta);
  const std::uint32_t n_blocks = r.U32();
  if (n_blocks != store.all().size()) {
    r.Fail("block count " + std::to_string(n_blocks) + " != model's " +
           std::to_string(store.all().size()));
  }
  std::set<std::string> seen;
  std::vector<std::pair<Parameter*, Matrix>> staged;
  for (std::uint32_t b = 0; b < n_blocks; ++b) {
    const std::string name = r.Str();
    const std::uint32_t rows = r.U32();
    const std::uint32_t cols = r.U32();
    const std::uint8_t dtype = r.U8();
    r.U8();
    if (dtype != 1) r.Fail("unsupported dtype " + std::to_string(dtype) + " in block " + name);
    Parameter* p = store.Find(name);
    if (p == nullptr) r.Fail("unknown parameter block " + name);
    if (!seen.insert(name).second) r.Fail("duplicate block " + name);
    if (p->value.rows() != rows || p->value.cols() != cols) {
      r.Fail("shape mismatch for " + name + ": file " + std::to_string(rows) + "x" +
             std::to_string(cols) + ", model " + std::to_string(p->value.rows()) + "x" +
             std::to_string(p->value.cols()));
    }
    Matrix m(rows, cols);
    r.RowMajor(m);
    staged.emplace_back(p, std::move(m));
  }
  const std::uint32_t n_slots = r.U32();
  std::map<std::string, Adam::Slot> slots;
  for (std::uint32_t s = 0; s < n_slots; ++s) {
    const std::string name = r.Str();
    Adam::Slot slot;
    slot.step = static_cast<std::int64_t>(r.U64());
    const std::uint32_t rows = r.U32();
    const std::uint32_t cols = r.U32();
    const Parameter* p = store.Find(name);
    if (p == nullptr || p->value.rows() != rows || p->value.cols() != cols) {
      r.Fail("optimizer slot does not match a parameter: " + name);
    }
    slot.m.resize(rows, cols);
    slot.v.resize(rows, cols);
    r.RowMajor(slot.m);
    r.RowMajor(slot.v);
    slots.emplace(name, std::move(slot));
  }
  if (r.pos() != bytes.size() - 8) r.Fail("trailing bytes before checksum");
  for (auto& [p, m] : staged) {
    p->value = std::move(m);
    p->grad.setZero();
  }
  if (optimizer != nullptr) optimizer->slots() = std::move(slots);
}

void SaveCheckpoint(const std::string& path, const ParameterStore& store, const Adam* optimizer,
                    const Metadata& meta) {
  WriteFile(path, EncodeCheckpoint(store, optimizer, meta));
}

void LoadCheckpoint(const std::string& path, ParameterStore& store, Adam* optimizer,
                    Metadata* meta) {
  DecodeCheckpoint(ReadFile(path), store, optimizer, meta);
}

}  // namespace c2f::nn
