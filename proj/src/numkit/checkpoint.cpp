#include "sit/numkit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sit::numkit {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<CheckpointEntry>& entries) {
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 8);
  for (const auto& e : entries) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) put_u32(out, d);
    for (float f : e.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

std::vector<CheckpointEntry> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.bytes(8) != std::string(kCheckpointMagic, 8)) throw FormatError("not a checkpoint (bad magic)");
  std::vector<CheckpointEntry> out;
  while (!r.done()) {
    CheckpointEntry e;
    e.name = r.bytes(r.u32());
    const auto rank = r.u32();
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      e.shape.push_back(r.u32());
      n *= e.shape.back();
    }
    if (n > bytes.size()) throw FormatError("checkpoint entry " + e.name + " larger than file");
    e.data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) e.data.push_back(std::bit_cast<float>(r.u32()));
    out.push_back(std::move(e));
  }
  return out;
}

template <typename T>
std::vector<CheckpointEntry> snapshot(const ParamStore<T>& store) {
  std::vector<CheckpointEntry> out;
  for (const auto& p : store.params()) {
    CheckpointEntry e;
    e.name = p.name;
    for (auto d : p.tensor.shape()) e.shape.push_back(static_cast<std::uint32_t>(d));
    for (T v : p.tensor.data()) e.data.push_back(static_cast<float>(v));
    out.push_back(std::move(e));
  }
  return out;
}

template <typename T>
void restore(ParamStore<T>& store, const std::vector<CheckpointEntry>& entries) {
  if (entries.size() != store.params().size())
    throw FormatError("checkpoint has " + std::to_string(entries.size()) + " parameters, model has " +
                      std::to_string(store.params().size()));
  for (const auto& e : entries) {
    if (!store.contains(e.name)) throw FormatError("checkpoint parameter " + e.name + " not in model");
    auto t = store.get(e.name);
    Shape s(e.shape.begin(), e.shape.end());
    if (s != t.shape())
      throw FormatError("parameter " + e.name + " has shape " + shape_str(s) + ", model expects " +
                        shape_str(t.shape()));
    auto d = t.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<T>(e.data[i]);
  }
}

void save_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries) {
  const auto bytes = encode_checkpoint(entries);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write checkpoint " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<CheckpointEntry> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot read checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

template std::vector<CheckpointEntry> snapshot(const ParamStore<float>&);
template std::vector<CheckpointEntry> snapshot(const ParamStore<double>&);
template void restore(ParamStore<float>&, const std::vector<CheckpointEntry>&);
template void restore(ParamStore<double>&, const std::vector<CheckpointEntry>&);

}  // namespace sit::numkit
